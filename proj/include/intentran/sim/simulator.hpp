#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <deque>
#include <limits>
#include <numbers>
#include <optional>
#include <utility>
#include <vector>

#include <spdlog/spdlog.h>

#include "intentran/apps/controls.hpp"
#include "intentran/core/errors.hpp"
#include "intentran/core/rng.hpp"
#include "intentran/sim/config.hpp"
#include "intentran/sim/energy.hpp"
#include "intentran/sim/radio.hpp"
#include "intentran/sim/state.hpp"
#include "intentran/sim/traffic.hpp"

namespace intentran::sim {

struct Packet {
  double arrival_s{};
  double bits{};
  friend bool operator==(const Packet&, const Packet&) = default;
};

struct SlotResult {
  KpiSnapshot kpi;
  /// Set when this slot closed a strategic tick.
  std::optional<TickReport> tick;
  std::size_t rejected_controls{};
};

/// Radio configuration used to evaluate what-if SINRs.
struct RadioSetting {
  std::vector<double> tx_dbm;
  std::vector<bool> sleeping;
  std::vector<std::size_t> attached;
};

/// Deterministic slot-stepped simulator of one macro area with small cells.
/// The object is a plain value: copying it snapshots every RNG stream.
class Simulator {
 public:
  explicit Simulator(SimConfig cfg) : cfg_(std::move(cfg)), codebook_(BeamCodebook::uniform(cfg_.num_antennas, cfg_.codebook_size)) {
    cfg_.validate();
    build_topology();
    build_ues();
    compute_load_scale();
    recompute_gains();
    for (std::size_t u = 0; u < ues_.size(); ++u) reset_arrivals(u, 0, 0.0);
    refresh_state(std::vector<double>(ues_.size(), 0.0));
    state_.traffic_mix = initial_mix();
  }

  const SimConfig& config() const { return cfg_; }
  const NetworkState& state() const { return state_; }
  const BeamCodebook& codebook() const { return codebook_; }
  std::uint64_t slot() const { return state_.slot; }
  std::uint64_t completed_ticks() const { return tick_; }
  bool at_strategic_boundary() const { return state_.slot % cfg_.strategic_period_slots == 0; }
  std::size_t num_ues() const { return ues_.size(); }
  std::size_t num_bs() const { return bss_.size(); }
  double load_scale() const { return load_scale_; }
  std::uint64_t config_epoch() const { return epoch_; }
  /// Changes whenever link gains or the radio configuration change.
  std::pair<std::uint64_t, std::uint64_t> radio_epoch() const { return {epoch_, tick_}; }
  std::size_t rejected_controls() const { return rejected_total_; }
  const std::vector<TickReport>& recent_ticks() const { return recent_; }
  std::optional<TickReport> last_tick() const {
    if (recent_.empty()) return std::nullopt;
    return recent_.back();
  }

  // ---- radio view used by the applications ----

  BsKind bs_kind(std::size_t b) const { return bss_[b].kind; }
  RatKind bs_rat(std::size_t b) const { return bss_[b].rat; }
  const RatParams& bs_rat_params(std::size_t b) const { return cfg_.rat(bss_[b].rat); }
  Position bs_position(std::size_t b) const { return bss_[b].pos; }
  const std::vector<double>& power_candidates(std::size_t b) const { return powers_of(bss_[b]); }
  std::size_t default_power_index(std::size_t b) const { return bss_[b].default_power; }
  std::size_t serving(std::size_t u) const { return ues_[u].serving; }
  TrafficKind ue_class(std::size_t u) const { return ues_[u].cls; }
  std::size_t anchor(std::size_t u) const { return ues_[u].anchor; }
  std::optional<std::size_t> beam(std::size_t u) const { return ues_[u].beam; }
  double link_gain_db(std::size_t u, std::size_t b) const { return gain_db_[u * bss_.size() + b]; }

  /// Bearing of UE u seen from BS b, radians in [0, 2π).
  double bearing(std::size_t u, std::size_t b) const {
    const auto& p = ues_[u].pos;
    const auto& q = bss_[b].pos;
    double a = std::atan2(p.y - q.y, p.x - q.x);
    if (a < 0) a += 2.0 * std::numbers::pi;
    return a;
  }

  double beam_gain_db(std::size_t u, std::size_t b, std::optional<std::size_t> beam) const {
    if (!beam || !bs_rat_params(b).beamforming) return 0.0;
    return codebook_.gain_db(*beam, bearing(u, b));
  }

  /// Offered rate of UE u at the current load scale, bit/s.
  double offered_rate(std::size_t u) const {
    const auto& c = cfg_.traffic(ues_[u].cls);
    return c.packet_bits * load_scale_ / c.mean_interarrival_s;
  }

  RadioSetting current_setting() const {
    RadioSetting s;
    s.tx_dbm.resize(bss_.size());
    s.sleeping.resize(bss_.size());
    s.attached.assign(bss_.size(), 0);
    for (std::size_t b = 0; b < bss_.size(); ++b) {
      s.tx_dbm[b] = powers_of(bss_[b])[bss_[b].power_index];
      s.sleeping[b] = bss_[b].sleeping;
    }
    for (const auto& u : ues_) ++s.attached[u.serving];
    return s;
  }

  /// SINR of UE u if served by BS b under the given setting. Co-channel BSs that
  /// are awake and have attached UEs interfere.
  double sinr_linear(std::size_t u, std::size_t b, const RadioSetting& s, std::optional<std::size_t> beam) const {
    if (s.sleeping[b]) return 0.0;
    const std::size_t nb = bss_.size();
    const double signal = dbm_to_mw(s.tx_dbm[b] + beam_gain_db(u, b, beam)) * gain_lin_[u * nb + b];
    double interference = 0.0;
    const RatKind rat = bss_[b].rat;
    for (std::size_t o = 0; o < nb; ++o) {
      if (o == b || bss_[o].rat != rat || s.sleeping[o] || s.attached[o] == 0) continue;
      interference += dbm_to_mw(s.tx_dbm[o]) * gain_lin_[u * nb + o];
    }
    return signal / (noise_mw_[static_cast<std::size_t>(rat)] + interference);
  }

  /// Rate of a bandwidth share, with the RAT's spectral-efficiency ceiling applied.
  double capped_rate(std::size_t b, double sinr_lin, double share_hz) const {
    const double se = std::min(std::log2(1.0 + sinr_lin), bs_rat_params(b).max_spectral_efficiency);
    return share_hz * se;
  }

  /// Number of UEs on BS b with queued data at the start of the last slot.
  std::size_t backlogged(std::size_t b) const { return bss_[b].last_backlogged; }

  // ---- episode control ----

  /// Re-derives every arrival stream for an independent episode starting now.
  void reseed(std::uint64_t episode) {
    const double now = static_cast<double>(state_.slot) * cfg_.slot_duration_s;
    for (std::size_t u = 0; u < ues_.size(); ++u) reset_arrivals(u, episode + 1, now);
  }

  SlotResult step(const apps::AppControls& controls) {
    SlotResult result;
    result.rejected_controls = apply_controls(controls);
    rejected_total_ += result.rejected_controls;

    const double dt = cfg_.slot_duration_s;
    const double t0 = static_cast<double>(state_.slot) * dt;
    const double t1 = t0 + dt;
    const std::size_t nb = bss_.size();
    const double size_factor = load_scale_ * diurnal_factor();

    KpiSnapshot kpi;
    kpi.duration_s = dt;

    // arrivals
    for (std::size_t u = 0; u < ues_.size(); ++u) {
      auto& ue = ues_[u];
      const auto& cls = cfg_.traffic(ue.cls);
      while (ue.next_arrival < t1) {
        const double bits = cls.packet_bits * size_factor;
        if (ue.queue.size() >= cfg_.max_queue_packets) {
          ++kpi.dropped_packets;
        } else {
          ue.queue.push_back({ue.next_arrival, bits});
          ue.queue_bits += bits;
        }
        kpi.offered_bits += bits;
        ue.offered_total += bits;
        kpi.per_class[index_of(ue.cls)].offered_bits += bits;
        ue.next_arrival += sample_interarrival(cls.distribution, cls.mean_interarrival_s, ue.rng);
      }
    }

    // scheduling: equal bandwidth share among backlogged UEs of each BS
    const RadioSetting setting = current_setting();
    std::vector<std::size_t> sched(nb, 0);
    for (const auto& ue : ues_)
      if (!ue.queue.empty()) ++sched[ue.serving];
    for (std::size_t b = 0; b < nb; ++b) bss_[b].last_backlogged = sched[b];

    std::vector<double> sinr(ues_.size(), 0.0);
    std::vector<double> busy(nb, 0.0);
    double delay_sum = 0.0;
    std::array<double, kNumTrafficKinds> class_delay{};
    for (std::size_t u = 0; u < ues_.size(); ++u) {
      auto& ue = ues_[u];
      const std::size_t b = ue.serving;
      sinr[u] = bss_[b].sleeping ? 0.0 : sinr_linear(u, b, setting, ue.beam);
      if (ue.queue.empty() || bss_[b].sleeping) continue;
      const double share = bs_rat_params(b).bandwidth_hz / static_cast<double>(sched[b]);
      const double rate = capped_rate(b, sinr[u], share);
      if (!(rate > 0.0)) continue;
      // fluid FIFO over [t0, t1)
      double cursor = t0;
      double served_bits = 0.0;
      double busy_time = 0.0;
      while (!ue.queue.empty()) {
        auto& p = ue.queue.front();
        const double start = std::max(cursor, p.arrival_s);
        if (start >= t1) break;
        const double capacity = (t1 - start) * rate;
        if (p.bits <= capacity) {
          const double depart = start + p.bits / rate;
          busy_time += depart - start;
          served_bits += p.bits;
          const double d = depart - p.arrival_s;
          delay_sum += d;
          class_delay[index_of(ue.cls)] += d;
          ue.tick_delay_sum += d;
          ++ue.tick_packets;
          ++kpi.packets;
          ++kpi.per_class[index_of(ue.cls)].packets;
          ue.queue_bits -= p.bits;
          cursor = depart;
          ue.queue.pop_front();
        } else {
          p.bits -= capacity;
          ue.queue_bits -= capacity;
          served_bits += capacity;
          busy_time += t1 - start;
          cursor = t1;
          break;
        }
      }
      if (ue.queue.empty()) ue.queue_bits = 0.0;
      ue.tick_delivered += served_bits;
      ue.delivered_total += served_bits;
      kpi.delivered_bits += served_bits;
      kpi.per_class[index_of(ue.cls)].delivered_bits += served_bits;
      busy[b] += busy_time / dt;
    }

    // energy and load
    for (std::size_t b = 0; b < nb; ++b) {
      auto& bs = bss_[b];
      const double e = bs_energy({bs.sleeping, setting.tx_dbm[b], energy_of(bs)}, dt);
      kpi.total_energy_j += e;
      bs.load = sched[b] == 0 ? 0.0 : std::clamp(busy[b] / static_cast<double>(sched[b]), 0.0, 1.0);
      bs.tick_load_sum += bs.load;
      bs.tick_load_peak = std::max(bs.tick_load_peak, bs.load);
    }

    finish_kpi(kpi, delay_sum, class_delay);
    accumulate(kpi, delay_sum, class_delay);

    ++state_.slot;
    refresh_state(sinr);

    if (at_strategic_boundary()) {
      result.tick = close_tick();
      advance_mobility();
    }
    result.kpi = kpi;
    return result;
  }

 private:
  struct Bs {
    BsKind kind{};
    RatKind rat{};
    Position pos;
    std::size_t default_power{};
    std::size_t power_index{};
    bool sleeping{false};
    double load{};
    double tick_load_sum{};
    double tick_load_peak{};
    double last_tick_mean{};
    double last_tick_peak{};
    std::size_t last_backlogged{};
  };

  struct Ue {
    TrafficKind cls{};
    Position pos;
    Position waypoint;
    std::optional<std::size_t> hotspot;
    std::size_t anchor{};
    std::size_t serving{};
    std::optional<std::size_t> beam;
    std::deque<Packet> queue;
    double queue_bits{};
    double next_arrival{};
    RngStream rng;
    double tick_delivered{};
    double offered_total{};
    double delivered_total{};
    double tick_delay_sum{};
    std::size_t tick_packets{};
  };

  const std::vector<double>& powers_of(const Bs& b) const {
    return b.kind == BsKind::macro ? cfg_.macro_power_dbm : cfg_.small_power_dbm;
  }
  const EnergyParams& energy_of(const Bs& b) const {
    return b.kind == BsKind::macro ? cfg_.macro_energy : cfg_.small_energy;
  }

  void build_topology() {
    bss_.clear();
    for (std::size_t m = 0; m < cfg_.num_macro_bs; ++m) {
      Bs b;
      b.kind = BsKind::macro;
      b.rat = cfg_.macro_rat;
      b.pos = {static_cast<double>(m) * 2.0 * cfg_.macro_radius_m, 0.0};
      b.default_power = b.power_index = cfg_.macro_default_power;
      bss_.push_back(b);
    }
    for (std::size_t s = 0; s < cfg_.num_small_bs; ++s) {
      const std::size_t host = s % cfg_.num_macro_bs;
      const std::size_t per_host = (cfg_.num_small_bs + cfg_.num_macro_bs - 1) / cfg_.num_macro_bs;
      const double angle = 2.0 * std::numbers::pi * static_cast<double>(s / cfg_.num_macro_bs) /
                           static_cast<double>(per_host);
      Bs b;
      b.kind = BsKind::small;
      b.rat = cfg_.small_rats[s % cfg_.small_rats.size()];
      b.pos = {bss_[host].pos.x + cfg_.small_ring_radius_m * std::cos(angle),
               bss_[host].pos.y + cfg_.small_ring_radius_m * std::sin(angle)};
      b.default_power = b.power_index = cfg_.small_default_power;
      bss_.push_back(b);
    }
    for (auto r : {RatKind::lte, RatKind::nr_mid, RatKind::nr_high})
      noise_mw_[static_cast<std::size_t>(r)] =
          dbm_to_mw(thermal_noise_dbm(cfg_.rat(r).bandwidth_hz, cfg_.noise_figure_db));
  }

  Position random_point(RngStream& rng, Position centre, double radius) {
    const double r = radius * std::sqrt(rng.uniform01());
    const double a = 2.0 * std::numbers::pi * rng.uniform01();
    return {centre.x + r * std::cos(a), centre.y + r * std::sin(a)};
  }

  Position ue_region_point(const Ue& ue, RngStream& rng) {
    if (ue.hotspot) return random_point(rng, bss_[*ue.hotspot].pos, cfg_.small_radius_m);
    return random_point(rng, bss_[ue.anchor].pos, cfg_.macro_radius_m);
  }

  void build_ues() {
    RngStream drop(cfg_.seed, stream_tag("drop"));
    ues_.assign(cfg_.num_ues, Ue{});
    // class counts by largest remainder so the mix is reproduced exactly
    std::array<std::size_t, kNumTrafficKinds> counts{};
    std::size_t assigned = 0;
    std::array<double, kNumTrafficKinds> rem{};
    for (std::size_t k = 0; k < kNumTrafficKinds; ++k) {
      const double exact = cfg_.class_mix[k] * static_cast<double>(cfg_.num_ues);
      counts[k] = static_cast<std::size_t>(std::floor(exact));
      rem[k] = exact - static_cast<double>(counts[k]);
      assigned += counts[k];
    }
    while (assigned < cfg_.num_ues) {
      const auto k = static_cast<std::size_t>(std::max_element(rem.begin(), rem.end()) - rem.begin());
      ++counts[k];
      rem[k] = -1.0;
      ++assigned;
    }
    // interleave classes so every region sees a mix
    std::vector<TrafficKind> classes;
    for (std::size_t i = 0; classes.size() < cfg_.num_ues; ++i)
      for (std::size_t k = 0; k < kNumTrafficKinds; ++k)
        if (i < counts[k]) classes.push_back(kAllTrafficKinds[k]);

    const std::size_t macros = cfg_.num_macro_bs;
    for (std::size_t u = 0; u < ues_.size(); ++u) {
      auto& ue = ues_[u];
      ue.cls = classes[u];
      ue.anchor = u % macros;
      if (cfg_.num_small_bs > 0 && drop.bernoulli(cfg_.hotspot_fraction))
        ue.hotspot = macros + drop.index(cfg_.num_small_bs);
      ue.pos = ue_region_point(ue, drop);
      ue.waypoint = ue_region_point(ue, drop);
      ue.serving = ue.anchor;
    }
    mobility_rng_ = RngStream(cfg_.seed, stream_tag("mobility"));

    // shadowing drawn once per UE-BS pair
    RngStream shadow(cfg_.seed, stream_tag("shadowing"));
    shadow_db_.resize(ues_.size() * bss_.size());
    for (auto& s : shadow_db_) s = cfg_.shadowing_sigma_db * shadow.normal();
  }

  void compute_load_scale() {
    load_scale_ = 1.0;
    if (!cfg_.offered_load_bps) return;
    double nominal = 0.0;
    for (const auto& ue : ues_) {
      const auto& c = cfg_.traffic(ue.cls);
      nominal += c.packet_bits / c.mean_interarrival_s;
    }
    load_scale_ = *cfg_.offered_load_bps / nominal;
  }

  std::array<double, kNumTrafficKinds> initial_mix() const {
    std::array<double, kNumTrafficKinds> mix{};
    double total = 0.0;
    for (std::size_t u = 0; u < ues_.size(); ++u) {
      mix[index_of(ues_[u].cls)] += offered_rate(u);
      total += offered_rate(u);
    }
    for (auto& m : mix) m /= total;
    return mix;
  }

  void recompute_gains() {
    const std::size_t nb = bss_.size();
    gain_db_.resize(ues_.size() * nb);
    gain_lin_.resize(ues_.size() * nb);
    for (std::size_t u = 0; u < ues_.size(); ++u)
      for (std::size_t b = 0; b < nb; ++b) {
        const double dx = ues_[u].pos.x - bss_[b].pos.x;
        const double dy = ues_[u].pos.y - bss_[b].pos.y;
        const double d = std::hypot(dx, dy);
        const double g = -pathloss_db(d, cfg_.rat(bss_[b].rat)) - shadow_db_[u * nb + b];
        gain_db_[u * nb + b] = g;
        gain_lin_[u * nb + b] = db_to_linear(g);
      }
  }

  void reset_arrivals(std::size_t u, std::uint64_t episode, double now) {
    auto& ue = ues_[u];
    ue.rng = arrival_stream(cfg_.seed, ue.cls, (episode << 20) + u);
    const auto& c = cfg_.traffic(ue.cls);
    ue.next_arrival = now + sample_interarrival(c.distribution, c.mean_interarrival_s, ue.rng);
  }

  double diurnal_factor() const {
    if (cfg_.diurnal_amplitude == 0.0) return 1.0;
    const double phase = 2.0 * std::numbers::pi * static_cast<double>(tick_ % cfg_.diurnal_period_ticks) /
                         static_cast<double>(cfg_.diurnal_period_ticks);
    return 1.0 + cfg_.diurnal_amplitude * std::sin(phase);
  }

  bool valid_bs(BsId b) const { return b.value < bss_.size(); }
  bool valid_ue(UeId u) const { return u.value < ues_.size(); }

  void move_ue(std::size_t u, std::size_t b) {
    if (ues_[u].serving == b) return;
    ues_[u].serving = b;
    ues_[u].beam.reset();
    ++epoch_;
  }

  std::size_t reject(const char* what, std::uint32_t a, std::uint32_t b = 0) {
    spdlog::debug("slot {}: rejected {} control ({}, {})", state_.slot, what, a, b);
    return 1;
  }

  std::size_t apply_controls(const apps::AppControls& c) {
    std::size_t rejected = 0;
    if (c.sleep_set) {
      std::vector<bool> want(bss_.size(), false);
      for (auto b : *c.sleep_set) {
        if (!valid_bs(b) || bss_[b.value].kind == BsKind::macro) {
          rejected += reject("sleep", b.value);
          continue;
        }
        want[b.value] = true;
      }
      for (std::size_t b = 0; b < bss_.size(); ++b)
        if (bss_[b].sleeping != want[b]) {
          bss_[b].sleeping = want[b];
          // a woken BS comes back at its default power
          if (!want[b]) bss_[b].power_index = bss_[b].default_power;
          ++epoch_;
        }
      for (std::size_t u = 0; u < ues_.size(); ++u)
        if (bss_[ues_[u].serving].sleeping) move_ue(u, ues_[u].anchor);
    }
    for (const auto& s : c.steering) {
      if (!valid_ue(s.ue) || !valid_bs(s.bs) || bss_[s.bs.value].sleeping) {
        rejected += reject("steering", s.ue.value, s.bs.value);
        continue;
      }
      move_ue(s.ue.value, s.bs.value);
    }
    for (const auto& h : c.handovers) {
      if (!valid_ue(h.ue) || !valid_bs(h.target) || !valid_bs(h.source) ||
          ues_[h.ue.value].serving != h.source.value || bss_[h.target.value].sleeping) {
        rejected += reject("handover", h.ue.value, h.target.value);
        continue;
      }
      move_ue(h.ue.value, h.target.value);
    }
    for (const auto& p : c.power) {
      if (!valid_bs(p.bs) || bss_[p.bs.value].sleeping || p.index >= powers_of(bss_[p.bs.value]).size()) {
        rejected += reject("power", p.bs.value, static_cast<std::uint32_t>(p.index));
        continue;
      }
      if (bss_[p.bs.value].power_index != p.index) {
        bss_[p.bs.value].power_index = p.index;
        ++epoch_;
      }
    }
    for (const auto& bm : c.beams) {
      if (!valid_ue(bm.ue) || !valid_bs(bm.bs) || bss_[bm.bs.value].sleeping ||
          ues_[bm.ue.value].serving != bm.bs.value || (bm.beam && *bm.beam >= codebook_.size())) {
        rejected += reject("beam", bm.bs.value, bm.ue.value);
        continue;
      }
      if (ues_[bm.ue.value].beam != bm.beam) {
        ues_[bm.ue.value].beam = bm.beam;
        ++epoch_;
      }
    }
    return rejected;
  }

  void finish_kpi(KpiSnapshot& k, double delay_sum, const std::array<double, kNumTrafficKinds>& class_delay) const {
    k.throughput_bps = k.delivered_bits / k.duration_s;
    k.mean_delay_s = k.packets == 0 ? 0.0 : delay_sum / static_cast<double>(k.packets);
    k.energy_efficiency = k.total_energy_j > 0.0 ? k.delivered_bits / k.total_energy_j : 0.0;
    for (std::size_t c = 0; c < kNumTrafficKinds; ++c) {
      auto& pc = k.per_class[c];
      pc.ues = class_ues_[c];
      pc.throughput_bps = pc.delivered_bits / k.duration_s;
      pc.per_ue_throughput_bps = pc.ues == 0 ? 0.0 : pc.throughput_bps / static_cast<double>(pc.ues);
      pc.mean_delay_s = pc.packets == 0 ? 0.0 : class_delay[c] / static_cast<double>(pc.packets);
      pc.energy_efficiency = k.total_energy_j > 0.0 ? pc.delivered_bits / k.total_energy_j : 0.0;
    }
  }

  void accumulate(const KpiSnapshot& k, double delay_sum, const std::array<double, kNumTrafficKinds>& class_delay) {
    acc_.delivered_bits += k.delivered_bits;
    acc_.offered_bits += k.offered_bits;
    acc_.total_energy_j += k.total_energy_j;
    acc_.duration_s += k.duration_s;
    acc_.packets += k.packets;
    acc_.dropped_packets += k.dropped_packets;
    acc_delay_ += delay_sum;
    for (std::size_t c = 0; c < kNumTrafficKinds; ++c) {
      auto& a = acc_.per_class[c];
      const auto& s = k.per_class[c];
      a.delivered_bits += s.delivered_bits;
      a.offered_bits += s.offered_bits;
      a.packets += s.packets;
      acc_class_delay_[c] += class_delay[c];
    }
  }

  TickReport close_tick() {
    TickReport r;
    r.tick = tick_;
    r.slot = state_.slot;
    KpiSnapshot k = acc_;
    finish_kpi(k, acc_delay_, acc_class_delay_);
    r.kpi = k;

    const double dur = acc_.duration_s;
    r.ues.resize(ues_.size());
    for (std::size_t u = 0; u < ues_.size(); ++u) {
      auto& ue = ues_[u];
      auto& st = r.ues[u];
      st.cls = ue.cls;
      st.throughput_bps = ue.tick_delivered / dur;
      st.packets = ue.tick_packets;
      if (ue.tick_packets > 0)
        st.mean_delay_s = ue.tick_delay_sum / static_cast<double>(ue.tick_packets);
      else if (!ue.queue.empty())
        st.mean_delay_s = static_cast<double>(state_.slot) * cfg_.slot_duration_s - ue.queue.front().arrival_s;
      st.violated = violates(st, k);
      ue.tick_delivered = ue.tick_delay_sum = 0.0;
      ue.tick_packets = 0;
    }

    double offered = 0.0;
    for (const auto& c : k.per_class) offered += c.offered_bits;
    if (offered > 0.0)
      for (std::size_t c = 0; c < kNumTrafficKinds; ++c) state_.traffic_mix[c] = k.per_class[c].offered_bits / offered;

    for (std::size_t b = 0; b < bss_.size(); ++b) {
      auto& bs = bss_[b];
      bs.last_tick_mean = bs.tick_load_sum / static_cast<double>(cfg_.strategic_period_slots);
      bs.last_tick_peak = bs.tick_load_peak;
      bs.tick_load_sum = bs.tick_load_peak = 0.0;
      state_.bss[b].tick_mean_load = bs.last_tick_mean;
      state_.bss[b].tick_peak_load = bs.last_tick_peak;
    }

    acc_ = KpiSnapshot{};
    acc_delay_ = 0.0;
    acc_class_delay_ = {};
    ++tick_;
    recent_.push_back(r);
    if (recent_.size() > kRecentTicks) recent_.erase(recent_.begin());
    return r;
  }

  bool violates(const UeTickStats& st, const KpiSnapshot& k) const {
    for (const auto& req : cfg_.traffic(st.cls).qos.requirements) {
      double achieved = 0.0;
      switch (req.metric) {
        case KpiKind::throughput: achieved = st.throughput_bps; break;
        case KpiKind::delay: achieved = st.mean_delay_s; break;
        case KpiKind::energy_efficiency: achieved = k.per_class[index_of(st.cls)].energy_efficiency; break;
      }
      const bool ok = req.direction == Direction::at_least ? achieved >= req.target : achieved <= req.target;
      if (!ok) return true;
    }
    return false;
  }

  void advance_mobility() {
    if (cfg_.ue_speed_mps <= 0.0) return;
    const double step = cfg_.ue_speed_mps * cfg_.strategic_duration_s();
    for (auto& ue : ues_) {
      const double dx = ue.waypoint.x - ue.pos.x;
      const double dy = ue.waypoint.y - ue.pos.y;
      const double d = std::hypot(dx, dy);
      if (d <= step) {
        ue.pos = ue.waypoint;
        ue.waypoint = ue_region_point(ue, mobility_rng_);
      } else {
        ue.pos.x += dx / d * step;
        ue.pos.y += dy / d * step;
      }
    }
    recompute_gains();
  }

  void refresh_state(const std::vector<double>& sinr) {
    const double now = static_cast<double>(state_.slot) * cfg_.slot_duration_s;
    state_.ues.resize(ues_.size());
    state_.bss.resize(bss_.size());
    class_ues_ = {};
    for (std::size_t b = 0; b < bss_.size(); ++b) {
      auto& s = state_.bss[b];
      const auto& bs = bss_[b];
      s.kind = bs.kind;
      s.rat = bs.rat;
      s.position = bs.pos;
      s.sleeping = bs.sleeping;
      s.load = bs.load;
      s.tick_mean_load = bs.last_tick_mean;
      s.tick_peak_load = bs.last_tick_peak;
      s.power_index = bs.power_index;
      s.tx_power_dbm = powers_of(bs)[bs.power_index];
      s.queue_packets = 0;
      s.attached = 0;
    }
    for (std::size_t u = 0; u < ues_.size(); ++u) {
      const auto& ue = ues_[u];
      auto& s = state_.ues[u];
      s.cls = ue.cls;
      s.serving = BsId{static_cast<std::uint32_t>(ue.serving)};
      s.beam = ue.beam;
      s.sinr_db = sinr[u] > 0.0 ? linear_to_db(sinr[u]) : -std::numeric_limits<double>::infinity();
      s.queue_packets = ue.queue.size();
      s.queue_bits = ue.queue_bits;
      s.offered_bits = ue.offered_total;
      s.delivered_bits = ue.delivered_total;
      s.queue_delay_s = ue.queue.empty() ? 0.0 : std::max(0.0, now - ue.queue.front().arrival_s);
      s.position = ue.pos;
      state_.bss[ue.serving].queue_packets += ue.queue.size();
      ++state_.bss[ue.serving].attached;
      ++class_ues_[index_of(ue.cls)];
    }
  }

  static constexpr std::size_t kRecentTicks = 64;

  SimConfig cfg_;
  BeamCodebook codebook_;
  std::vector<Bs> bss_;
  std::vector<Ue> ues_;
  std::vector<double> shadow_db_;
  std::vector<double> gain_db_;
  std::vector<double> gain_lin_;
  std::array<double, kNumRats> noise_mw_{};
  std::array<std::size_t, kNumTrafficKinds> class_ues_{};
  RngStream mobility_rng_;
  double load_scale_{1.0};
  std::uint64_t tick_{0};
  std::uint64_t epoch_{0};
  std::size_t rejected_total_{0};
  NetworkState state_;
  KpiSnapshot acc_;
  double acc_delay_{0.0};
  std::array<double, kNumTrafficKinds> acc_class_delay_{};
  std::vector<TickReport> recent_;
};

}  // namespace intentran::sim
