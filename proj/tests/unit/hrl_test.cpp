#include <gtest/gtest.h>

#include <filesystem>
#include <random>

#include "intentran/hrl/trainer.hpp"

using namespace intentran;
using namespace intentran::hrl;
using apps::AppId;
using apps::AppSet;

namespace {

intent::ProcessedIntent make_intent(KpiKind k, double pct) {
  intent::ProcessedIntent p;
  p.raw = "t";
  p.type = k;
  p.magnitude_pct = pct;
  p.keywords = {"x"};
  return p;
}

FilteredActionSet set_of(std::vector<std::size_t> a) {
  FilteredActionSet f;
  f.actions = std::move(a);
  f.scores.assign(f.actions.size(), 1.0);
  return f;
}

double coverage(KpiKind k, AppSet a) {
  double c = 0;
  for (auto id : a.apps()) c += apps::capability(id, k);
  return c / static_cast<double>(a.size());
}

}  // namespace

TEST(Goal, Arithmetic) {
  auto g = intent_to_goal(make_intent(KpiKind::throughput, 15), 100e6);
  EXPECT_NEAR(g.target_value, 115e6, 1e-6);
  g = intent_to_goal(make_intent(KpiKind::delay, -13), 0.020);
  EXPECT_NEAR(g.target_value, 0.0174, 1e-12);
  EXPECT_THROW(intent_to_goal(make_intent(KpiKind::throughput, 15), 0.0), DegenerateBaseline);
  EXPECT_THROW(intent_to_goal(make_intent(KpiKind::throughput, 15), 1.0, 0), ConfigurationError);
}

TEST(Goal, BucketsAndActions) {
  EXPECT_EQ(snap_bucket(5), 0u);
  EXPECT_EQ(snap_bucket(7.5), 0u);
  EXPECT_EQ(snap_bucket(13), 2u);
  EXPECT_EQ(snap_bucket(-22), 3u);
  EXPECT_EQ(snap_bucket(100), 4u);
  for (std::size_t a = 0; a < kNumActions; ++a) EXPECT_EQ(action_index(action_set(a)), a);
  EXPECT_THROW(action_index(AppSet{}), ContractViolation);
  auto g = intent_to_goal(make_intent(KpiKind::delay, -20), 1.0);
  EXPECT_TRUE(g.reached(0.8));
  EXPECT_TRUE(g.reached(0.81));
  EXPECT_FALSE(g.reached(0.9));
}

TEST(Attention, ZeroThetaGivesHalf) {
  AttentionConfig c;
  c.theta = Theta{};
  for (double s : attention_scores({0.7, 0.5}, KpiKind::throughput, c)) EXPECT_DOUBLE_EQ(s, 0.5);
}

TEST(Attention, DefaultScorerExamples) {
  AttentionConfig c;
  for (double load : {0.1, 0.5, 0.9}) {
    const auto s = attention_scores({load, 0.4}, KpiKind::throughput, c);
    EXPECT_LT(s[action_index(AppSet{AppId::app2})], c.epsilon);
    EXPECT_GT(s[action_index(AppSet{AppId::app1, AppId::app3})], c.epsilon);
  }
  AttentionConfig none;
  none.theta.reset();
  EXPECT_THROW(attention_scores({}, KpiKind::throughput, none), ScorerUnavailable);
  const auto f = feasible_actions({}, KpiKind::throughput, none);
  EXPECT_TRUE(f.unfiltered);
  EXPECT_EQ(f.actions.size(), kNumActions);
}

TEST(Attention, FilterExamples) {
  Scores s{};
  s[0] = 0.9;
  s[1] = 0.4;
  s[2] = 0.05;
  auto f = filter_actions(s, 0.1);
  EXPECT_EQ(f.actions, (std::vector<std::size_t>{0, 1}));
  EXPECT_FALSE(f.fallback);

  f = filter_actions(s, 0.99);
  EXPECT_TRUE(f.fallback);
  EXPECT_EQ(f.actions, (std::vector<std::size_t>{0, 1, 2}));

  Scores pos;
  pos.fill(0.01);
  f = filter_actions(pos, 0.0);
  EXPECT_EQ(f.actions.size(), kNumActions);
}

TEST(Attention, FilteredSetsAreSoundAndCovering) {
  // exhaustive over 31 actions × 3 KPIs × sampled states; oracle is the capability table
  AttentionConfig c;
  RngStream rng(3, stream_tag("states"));
  for (int i = 0; i < 10; ++i) {
    const ScoringState st{rng.uniform01(), 0.25 + 0.75 * rng.uniform01()};
    for (auto k : kAllKpis) {
      const auto scores = attention_scores(st, k, c);
      const auto f = filter_actions(scores, c.epsilon);
      ASSERT_FALSE(f.fallback);
      EXPECT_LE(f.actions.size(), 12u);
      bool covered = false;
      for (std::size_t a = 0; a < kNumActions; ++a) {
        EXPECT_EQ(f.contains(a), scores[a] > c.epsilon);
        if (f.contains(a)) covered = covered || coverage(k, action_set(a)) > 0;
      }
      EXPECT_TRUE(covered);
    }
  }
}

TEST(Controller, SelectExamples) {
  QTable q;
  RngStream rng(1, 0);
  q.q(0, 0, 0) = 1.0;
  q.q(0, 0, 1) = 2.0;
  EXPECT_EQ(select_action(q, 0, 0, set_of({0, 1}), 0.0, rng), 1u);
  EXPECT_EQ(select_action(q, 0, 0, set_of({0}), 1.0, rng), 0u);
  q.q(0, 0, 1) = 1.0;
  EXPECT_EQ(select_action(q, 0, 0, set_of({0, 1}), 0.0, rng), 0u);
  EXPECT_THROW(select_action(q, 0, 0, set_of({}), 0.0, rng), ContractViolation);
}

TEST(Controller, SelectionStaysInFilteredSet) {
  QTable q;
  q.q(1, 2, 30) = 100.0;  // best action overall is outside the set
  RngStream rng(7, 0);
  const auto f = set_of({3, 8, 12});
  for (double eps : {0.0, 0.5, 1.0})
    for (int i = 0; i < 200; ++i) EXPECT_TRUE(f.contains(select_action(q, 1, 2, f, eps, rng)));
}

TEST(Controller, ArgmaxInvariantUnderScaling) {
  std::mt19937_64 g(2);
  std::uniform_real_distribution<double> u(-5, 5);
  const auto all = all_actions();
  for (int trial = 0; trial < 50; ++trial) {
    QTable q;
    for (std::size_t a = 0; a < kNumActions; ++a) q.q(0, 0, a) = u(g);
    const auto before = q.greedy(0, 0, all.actions);
    const double k = 0.01 + std::abs(u(g));
    for (std::size_t a = 0; a < kNumActions; ++a) q.q(0, 0, a) *= k;
    EXPECT_EQ(q.greedy(0, 0, all.actions), before);
  }
}

TEST(Controller, UpdateExamples) {
  QTable q;
  LearningParams p;
  q_update(q, {0, 0, 0, 1.0, 0}, {0}, p);
  EXPECT_DOUBLE_EQ(q.q(0, 0, 0), 0.00025);

  QTable z;
  z.q(1, 1, 1) = 0.3;
  const QTable before = z;
  LearningParams frozen;
  frozen.alpha = 0.0;
  q_update(z, {1, 1, 1, 5.0, 2}, {1}, frozen);
  EXPECT_EQ(z, before);

  // γ = 0: Q_n = 1 − (1 − α)^n
  LearningParams myopic;
  myopic.gamma = 0.0;
  myopic.alpha = 0.1;
  QTable m;
  for (int n = 1; n <= 200; ++n) {
    q_update(m, {0, 0, 0, 1.0, 0}, {0}, myopic);
    EXPECT_NEAR(m.q(0, 0, 0), 1.0 - std::pow(0.9, n), 1e-12);
  }
}

TEST(Controller, EpsilonScheduleMonotone) {
  LearningParams p;
  double prev = 2.0;
  for (std::size_t e = 0; e < 300; ++e) {
    const double eps = epsilon_schedule(p, e, 200);
    EXPECT_LE(eps, prev);
    EXPECT_GE(eps, p.epsilon_end - 1e-12);
    prev = eps;
  }
  EXPECT_DOUBLE_EQ(epsilon_schedule(p, 0, 200), 1.0);
  EXPECT_DOUBLE_EQ(epsilon_schedule(p, 199, 200), 0.1);
}

TEST(Controller, MatchesValueIterationOnSmallMdp) {
  // 2 states × 3 actions, deterministic transitions
  const int next[2][3] = {{0, 1, 1}, {0, 1, 0}};
  const double rew[2][3] = {{0.0, 0.2, -0.1}, {1.0, 0.3, 0.5}};
  const double gamma = 0.9;
  double v[2] = {0, 0};
  for (int it = 0; it < 2000; ++it) {
    double nv[2];
    for (int s = 0; s < 2; ++s) {
      nv[s] = -1e9;
      for (int a = 0; a < 3; ++a) nv[s] = std::max(nv[s], rew[s][a] + gamma * v[next[s][a]]);
    }
    v[0] = nv[0];
    v[1] = nv[1];
  }
  std::size_t opt[2];
  for (int s = 0; s < 2; ++s) {
    double best = -1e9;
    for (int a = 0; a < 3; ++a)
      if (rew[s][a] + gamma * v[next[s][a]] > best + 1e-12) {
        best = rew[s][a] + gamma * v[next[s][a]];
        opt[s] = static_cast<std::size_t>(a);
      }
  }

  QTable q;
  LearningParams p;
  p.alpha = 0.05;
  p.gamma = gamma;
  const std::vector<std::size_t> allowed{0, 1, 2};
  RngStream rng(11, 0);
  for (int n = 0; n < 100000; ++n) {
    const auto s = rng.index(2), a = rng.index(3);
    q_update(q, {s, 0, a, rew[s][a], static_cast<std::size_t>(next[s][a])}, allowed, p);
  }
  EXPECT_EQ(q.greedy(0, 0, allowed), opt[0]);
  EXPECT_EQ(q.greedy(1, 0, allowed), opt[1]);
}

TEST(Rewards, Examples) {
  Goal g;
  g.kpi = KpiKind::throughput;
  g.baseline = 100;
  g.target_value = 110;
  auto r = compute_rewards(g, 110, 0);
  EXPECT_DOUBLE_EQ(r.c_rho, 1.0);
  EXPECT_DOUBLE_EQ(r.r_in, 1.0);
  r = compute_rewards(g, 105, 2, 0.1);
  EXPECT_DOUBLE_EQ(r.c_rho, 0.5);
  EXPECT_NEAR(r.r_in, 0.3, 1e-15);
  EXPECT_DOUBLE_EQ(compute_rewards(g, 1000, 0).c_rho, 1.0);
  EXPECT_DOUBLE_EQ(compute_rewards(g, 0, 0).c_rho, -1.0);
  ExtrinsicReward e;
  for (double x : {0.1, 0.2, 0.3}) e.add(x);
  EXPECT_NEAR(e.total, 0.6, 1e-15);
  EXPECT_EQ(e.steps, 3u);
  g.target_value = g.baseline;
  EXPECT_THROW(compute_rewards(g, 1, 0), DegenerateGoal);
  g.target_value = 110;
  EXPECT_THROW(compute_rewards(g, 1, 0, -0.1), ContractViolation);
}

TEST(Rewards, DelayGoalProgressSign) {
  auto g = intent_to_goal(make_intent(KpiKind::delay, -10), 1.0);
  EXPECT_DOUBLE_EQ(compute_rewards(g, 0.9, 0).c_rho, 1.0);
  EXPECT_GT(compute_rewards(g, 0.95, 0).c_rho, 0.0);
  EXPECT_LT(compute_rewards(g, 1.05, 0).c_rho, 0.0);
}

TEST(Scorer, SeparableSetIsLearned) {
  // oracle: label = sign of a fixed plane over the non-bias features
  const Theta plane{0.3, 1.0, -2.0, 0.5, 1.5, -0.7};
  RngStream rng(4, 0);
  std::vector<Features> x;
  std::vector<int> y;
  while (x.size() < 2000) {
    Features f{1.0};
    for (std::size_t j = 1; j < kNumFeatures; ++j) f[j] = rng.uniform01() * 2 - 1;
    double z = 0;
    for (std::size_t j = 0; j < kNumFeatures; ++j) z += plane[j] * f[j];
    if (std::abs(z) < 0.05) continue;
    x.push_back(f);
    y.push_back(z > 0);
  }
  const auto fit = train_on_features(x, y, 1);
  EXPECT_GE(fit.heldout_accuracy, 0.95);
  EXPECT_EQ(fit.train_size + fit.heldout_size, x.size());
}

TEST(Scorer, Errors) {
  EXPECT_THROW(train_scorer({}), TrainingDegenerate);
  std::vector<LabeledSample> one(600, LabeledSample{{0.5, 0.5}, KpiKind::throughput, 0, 1});
  EXPECT_THROW(train_scorer(one), TrainingDegenerate);
}

TEST(Scorer, CapabilityLabelsRankCoveringActionsFirst) {
  const auto fit = train_scorer(oracle_samples(40, 2));
  EXPECT_GE(fit.heldout_accuracy, 0.95);
  AttentionConfig c;
  c.theta = fit.theta;
  RngStream rng(8, 0);
  for (int i = 0; i < 10; ++i) {
    const ScoringState st{rng.uniform01(), 0.25 + 0.75 * rng.uniform01()};
    for (auto k : kAllKpis) {
      const auto s = attention_scores(st, k, c);
      double lo_cover = 1, hi_none = 0;
      for (std::size_t a = 0; a < kNumActions; ++a) {
        const double cov = coverage(k, action_set(a));
        if (cov == 1.0) lo_cover = std::min(lo_cover, s[a]);
        if (cov == 0.0) hi_none = std::max(hi_none, s[a]);
      }
      EXPECT_GT(lo_cover, hi_none) << to_string(k);
    }
  }
}

TEST(Scorer, LabelFileAndCheckpointRoundTrip) {
  const auto dir = std::filesystem::temp_directory_path();
  const auto labels = (dir / "intentran_labels_test.csv").string();
  const auto xs = oracle_samples(3, 5);
  save_labels(labels, xs);
  const auto back = load_labels(labels);
  ASSERT_EQ(back.size(), xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i) {
    EXPECT_EQ(back[i].action, xs[i].action);
    EXPECT_EQ(back[i].kpi, xs[i].kpi);
    EXPECT_EQ(back[i].fulfilled, xs[i].fulfilled);
    EXPECT_DOUBLE_EQ(back[i].state.mean_load, xs[i].state.mean_load);
  }
  std::filesystem::remove(labels);

  AttentionConfig c;
  c.theta = Theta{0.1, -0.2, 1.0 / 3.0, 4, 5, 6};
  c.epsilon = 0.25;
  const auto r = scorer_from_json(nlohmann::json::parse(scorer_to_json(c).dump()));
  EXPECT_EQ(*r.theta, *c.theta);
  EXPECT_EQ(r.epsilon, c.epsilon);
  EXPECT_THROW(scorer_from_json({{"format", "nope"}}), ConfigurationError);
}

TEST(QTableCheckpoint, RoundTripExact) {
  QTable q;
  RngStream rng(6, 0);
  for (std::size_t s = 0; s < kNumStates; ++s)
    for (std::size_t g = 0; g < kNumGoals; ++g) {
      q.meta(s, g) = rng.uniform01() / 3.0;
      for (std::size_t a = 0; a < kNumActions; ++a) q.q(s, g, a) = rng.uniform01() * 1e-7 - 0.3;
    }
  EXPECT_EQ(QTable::from_json(nlohmann::json::parse(q.to_json().dump())), q);
  auto bad = q.to_json();
  bad["actions"] = 30;
  EXPECT_THROW(QTable::from_json(bad), ConfigurationError);
}

TEST(Trainer, ShortRunIsDeterministicAndLogged) {
  sim::SimConfig c;
  c.offered_load_bps = 400e6;
  TrainerConfig tc;
  tc.episodes = 6;
  tc.tau = 3;
  tc.app1_pretrain_decisions = 200;
  Trainer a(c, tc), b(c, tc);
  a.train();
  b.train();
  EXPECT_EQ(a.qtable(), b.qtable());
  ASSERT_EQ(a.log().size(), 6u);
  for (const auto& e : a.log()) {
    EXPECT_EQ(e.filtered_size, a.feasible().actions.size());
    EXPECT_TRUE(std::isfinite(e.extrinsic));
  }
  const auto f = std::filesystem::temp_directory_path() / "intentran_trainlog_test.csv";
  a.write_log(f.string());
  std::ifstream in(f);
  std::string header;
  std::getline(in, header);
  EXPECT_EQ(header, "episode,extrinsic_reward,filtered_set_size,epsilon2");
  std::filesystem::remove(f);
}
