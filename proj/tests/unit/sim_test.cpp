#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "intentran/sim/simulator.hpp"

using namespace intentran;
using namespace intentran::sim;

namespace {

double mean_gap(const std::vector<double>& ts) {
  return ts.back() / static_cast<double>(ts.size());
}

SimConfig single_ue_config() {
  SimConfig c;
  c.num_macro_bs = 1;
  c.num_small_bs = 0;
  c.num_ues = 1;
  c.ue_speed_mps = 0.0;
  c.class_mix = {0.0, 1.0, 0.0, 0.0};  // gaming: uniform gaps of at least 20 ms
  return c;
}

}  // namespace

TEST(Arrivals, VoiceMeanWithinFivePercent) {
  auto cls = default_traffic_classes()[index_of(TrafficKind::voice)];
  auto rng = arrival_stream(7, cls.kind);
  auto ts = generate_arrivals(cls, 2000.0, rng);
  ASSERT_GE(ts.size(), 90000u);
  EXPECT_NEAR(mean_gap(ts), 0.020, 0.05 * 0.020);
}

TEST(Arrivals, GamingAndUrllcMeansWithinFivePercent) {
  for (auto kind : {TrafficKind::gaming, TrafficKind::urllc}) {
    auto cls = default_traffic_classes()[index_of(kind)];
    auto rng = arrival_stream(11, kind);
    auto ts = generate_arrivals(cls, cls.mean_interarrival_s * 1e5, rng);
    EXPECT_NEAR(mean_gap(ts), cls.mean_interarrival_s, 0.05 * cls.mean_interarrival_s) << to_string(kind);
  }
}

TEST(Arrivals, ParetoScaleMatchesClosedFormMean) {
  // closed-form Pareto mean: x_m · a / (a − 1)
  const double xm = pareto_scale_for_mean(12.5e-3);
  EXPECT_NEAR(xm * kParetoShape / (kParetoShape - 1.0), 12.5e-3, 1e-15);
  auto cls = default_traffic_classes()[index_of(TrafficKind::video)];
  auto rng = arrival_stream(3, cls.kind);
  auto ts = generate_arrivals(cls, 12.5e-3 * 1e6, rng);
  ASSERT_GE(ts.size(), 900000u);
  EXPECT_NEAR(mean_gap(ts), 12.5e-3, 0.10 * 12.5e-3);
  EXPECT_GE(ts.front(), xm);
}

TEST(Arrivals, StrictlyIncreasingAndPositive) {
  for (const auto& cls : default_traffic_classes()) {
    auto rng = arrival_stream(5, cls.kind);
    auto ts = generate_arrivals(cls, 5.0, rng);
    ASSERT_FALSE(ts.empty());
    EXPECT_GT(ts.front(), 0.0);
    for (std::size_t i = 1; i < ts.size(); ++i) ASSERT_LT(ts[i - 1], ts[i]);
  }
}

TEST(Arrivals, NonPositiveHorizonIsConfigurationError) {
  auto cls = default_traffic_classes()[0];
  RngStream rng(1, 1);
  EXPECT_THROW(generate_arrivals(cls, 0.0, rng), ConfigurationError);
  EXPECT_THROW(generate_arrivals(cls, -1.0, rng), ConfigurationError);
}

TEST(LinkRate, ShannonExamples) {
  EXPECT_DOUBLE_EQ(link_rate(1.0, 1.0), 1.0);
  EXPECT_DOUBLE_EQ(link_rate(0.0, 5e6), 0.0);
  EXPECT_DOUBLE_EQ(link_rate(3.0, 10e6), 20e6);
  EXPECT_THROW(link_rate(-0.1, 1.0), DomainError);
  EXPECT_THROW(link_rate(1.0, -1.0), DomainError);
}

TEST(Energy, DeclaredLinearModel) {
  EXPECT_DOUBLE_EQ(bs_energy({true, 30.0, {130.0, 4.7, 10.0}}, 1.0), 10.0);
  EXPECT_DOUBLE_EQ(bs_energy_watts({100.0, 4.7, 10.0}, false, 0.0, 1.0), 100.0);
  const EnergyParams macro{130.0, 4.7, 10.0};
  EXPECT_GT(bs_energy({false, 43.0, macro}, 1.0), bs_energy({false, 38.0, macro}, 1.0));
  EXPECT_THROW(bs_energy({false, 38.0, macro}, 0.0), ConfigurationError);
}

TEST(Codebook, NearestAngleAndConstantModulus) {
  BeamCodebook cb(16, {0.0, M_PI / 6, M_PI / 3});
  EXPECT_EQ(cb.nearest(M_PI / 6), 1u);
  EXPECT_EQ(cb.nearest(2 * M_PI - 0.01), 0u);
  EXPECT_DOUBLE_EQ(cb.weight_magnitude() * cb.weight_magnitude() * 16, 1.0);
  EXPECT_NEAR(cb.gain_db(1, M_PI / 6), 10 * std::log10(16.0), 1e-12);
  EXPECT_DOUBLE_EQ(cb.gain_db(0, M_PI), 0.0);
}

TEST(Simulator, ZeroArrivalsGiveZeroThroughputButPositiveEnergy) {
  SimConfig c;
  for (auto& cls : c.classes) cls.mean_interarrival_s = 1e9;
  Simulator sim(c);
  for (int i = 0; i < 10; ++i) {
    auto r = sim.step({});
    EXPECT_EQ(r.kpi.throughput_bps, 0.0);
    EXPECT_GT(r.kpi.total_energy_j, 0.0);
    EXPECT_EQ(r.kpi.energy_efficiency, 0.0);
  }
}

TEST(Simulator, SingleUeDelayIsTransmissionTime) {
  auto c = single_ue_config();
  Simulator sim(c);
  // hand-computed service rate from the link budget
  const double noise = thermal_noise_dbm(c.rat(RatKind::lte).bandwidth_hz, c.noise_figure_db);
  const double snr = std::pow(10.0, (38.0 + sim.link_gain_db(0, 0) - noise) / 10.0);
  const double se = std::min(std::log2(1.0 + snr), c.rat(RatKind::lte).max_spectral_efficiency);
  const double rate = c.rat(RatKind::lte).bandwidth_hz * se;
  const double expected = c.traffic(TrafficKind::gaming).packet_bits / rate;
  double delay_sum = 0.0;
  std::size_t packets = 0;
  for (int i = 0; i < 500; ++i) {
    auto r = sim.step({});
    delay_sum += r.kpi.mean_delay_s * static_cast<double>(r.kpi.packets);
    packets += r.kpi.packets;
  }
  ASSERT_GT(packets, 50u);
  EXPECT_NEAR(delay_sum / static_cast<double>(packets), expected, expected * 1e-9);
}

TEST(Simulator, SameSeedIsBitIdentical) {
  SimConfig c;
  c.seed = 99;
  Simulator a(c), b(c);
  for (int i = 0; i < 300; ++i) {
    auto ra = a.step({});
    auto rb = b.step({});
    ASSERT_EQ(ra.kpi, rb.kpi);
    ASSERT_EQ(ra.tick, rb.tick);
  }
  EXPECT_EQ(a.state(), b.state());
}

TEST(Simulator, CopyResumesIdentically) {
  SimConfig c;
  Simulator a(c);
  for (int i = 0; i < 150; ++i) a.step({});
  Simulator b = a;
  for (int i = 0; i < 150; ++i) ASSERT_EQ(a.step({}).kpi, b.step({}).kpi);
}

TEST(Simulator, ConservationAndSleepingExclusion) {
  SimConfig c;
  c.offered_load_bps = 300e6;
  Simulator sim(c);
  RngStream rng(4, 4);
  for (int i = 0; i < 400; ++i) {
    apps::AppControls ctl;
    if (i % 100 == 0) {
      std::vector<BsId> sleep;
      for (std::uint32_t b = 1; b < sim.num_bs(); ++b)
        if (rng.bernoulli(0.5)) sleep.push_back({b});
      ctl.sleep_set = sleep;
    }
    for (std::uint32_t u = 0; u < sim.num_ues(); ++u)
      if (rng.bernoulli(0.05)) ctl.steering.push_back({{u}, {static_cast<std::uint32_t>(rng.index(sim.num_bs()))}});
    double queued = 0.0;
    for (const auto& u : sim.state().ues) queued += u.queue_bits;
    auto r = sim.step(ctl);
    EXPECT_LE(r.kpi.delivered_bits, r.kpi.offered_bits + queued + 1e-6);
    EXPECT_GT(r.kpi.total_energy_j, 0.0);
    const auto& st = sim.state();
    for (const auto& u : st.ues) {
      EXPECT_FALSE(st.bss[u.serving.value].sleeping);
      EXPECT_GE(u.queue_bits, -1e-6);
    }
    double mix = std::accumulate(st.traffic_mix.begin(), st.traffic_mix.end(), 0.0);
    EXPECT_NEAR(mix, 1.0, 1e-9);
    for (const auto& b : st.bss) {
      EXPECT_GE(b.load, 0.0);
      EXPECT_LE(b.load, 1.0);
      if (b.sleeping) {
        EXPECT_EQ(b.attached, 0u);
      }
    }
  }
}

TEST(Simulator, SteeringToSleepingBsIsRejected) {
  SimConfig c;
  Simulator sim(c);
  apps::AppControls sleep;
  sleep.sleep_set = std::vector<BsId>{{1}};
  sim.step(sleep);
  apps::AppControls steer;
  steer.steering.push_back({{0}, {1}});
  auto r = sim.step(steer);
  EXPECT_EQ(r.rejected_controls, 1u);
  EXPECT_EQ(sim.serving(0), sim.anchor(0));
}

TEST(Simulator, MacroCannotSleep) {
  Simulator sim(SimConfig{});
  apps::AppControls ctl;
  ctl.sleep_set = std::vector<BsId>{{0}};
  EXPECT_EQ(sim.step(ctl).rejected_controls, 1u);
  EXPECT_FALSE(sim.state().bss[0].sleeping);
}

TEST(Simulator, OfferedLoadScaling) {
  SimConfig c;
  c.offered_load_bps = 5e6;
  Simulator sim(c);
  double offered = 0.0;
  for (int i = 0; i < 3000; ++i) offered += sim.step({}).kpi.offered_bits;
  EXPECT_NEAR(offered / 30.0, 5e6, 0.05 * 5e6);
}

TEST(SimConfig, InvariantsRejected) {
  SimConfig c;
  c.num_ues = 0;
  EXPECT_THROW(c.validate(), ConfigurationError);
  c = SimConfig{};
  c.slot_duration_s = 0;
  EXPECT_THROW(c.validate(), ConfigurationError);
  c = SimConfig{};
  c.rats[0].bandwidth_hz = 0;
  EXPECT_THROW(c.validate(), ConfigurationError);
  c = SimConfig{};
  c.small_power_dbm = {30.0, 20.0};
  EXPECT_THROW(c.validate(), ConfigurationError);
  c = SimConfig{};
  c.macro_power_dbm = {32.0, 40.0};
  EXPECT_THROW(c.validate(), ConfigurationError);
}
