#include "dhcosim/plants/rbc.hpp"

#include <fmt/format.h>

namespace dhcosim::plants {

namespace {

struct Sizes {
  double bmin, bmax, capacity, power, spacing_h;
};

void check(const RbcParams& r) {
  if (!(r.step_h > 0.0)) throw InvalidArgument("RBC step_h must be positive");
  if (r.off_delay_h < 0.0) throw InvalidArgument("RBC off_delay_h must be >= 0");
  if (r.on_margin_mw < 0.0 || r.off_margin_mw < 0.0) {
    throw InvalidArgument("RBC margins must be >= 0");
  }
}

// Commitment and storage rules shared by both baselines. `demand` is the
// block whose output the biomass boiler should follow.
std::string biomass_rules(const Sizes& s, const RbcParams& r, const std::string& demand) {
  return fmt::format(
      R"(# biomass commitment with hysteresis and stop spacing
block on_thr const value={on}
block off_thr const value={off}
block high ge
block low lt
block low_long timer delay={delay}
block spacing const value={spacing}
block can_stop ge
block release and
block commit latch
{d}.y -> high.a
on_thr.y -> high.b
{d}.y -> low.a
off_thr.y -> low.b
low.y -> low_long.u
since_stop.y -> can_stop.a
spacing.y -> can_stop.b
low_long.y -> release.a
can_stop.y -> release.b
high.y -> commit.s
release.y -> commit.r

# storage room and content, as powers over one controller step
block cap const value={cap}
block room sum kb=-1
block room_p gain k={inv_dt}
block stored_p gain k={inv_dt}
cap.y -> room.a
E.y -> room.b
room.y -> room_p.u
E.y -> stored_p.u

# biomass headroom goes into the tank
block bmax const value={bmax}
block headroom sum kb=-1
block bio_ch_raw saturation min=0 max={pw}
block bio_ch_lim min
block bio_charge mul
bmax.y -> headroom.a
{d}.y -> headroom.b
headroom.y -> bio_ch_raw.u
bio_ch_raw.y -> bio_ch_lim.a
room_p.y -> bio_ch_lim.b
bio_ch_lim.y -> bio_charge.a
commit.y -> bio_charge.b
)",
      fmt::arg("on", s.bmin + r.on_margin_mw), fmt::arg("off", s.bmin - r.off_margin_mw),
      fmt::arg("delay", r.off_delay_h * 3600.0), fmt::arg("spacing", s.spacing_h),
      fmt::arg("cap", s.capacity), fmt::arg("inv_dt", 1.0 / r.step_h), fmt::arg("bmax", s.bmax),
      fmt::arg("pw", s.power), fmt::arg("d", demand));
}

}  // namespace

std::string rbc_logic_a(const PlantParamsA& plant, const RbcParams& rbc) {
  plant.validate();
  check(rbc);
  const Sizes s{plant.biomass_min_mw(), plant.biomass_max_mw, plant.storage_capacity_mwh,
                plant.storage_power_mw, plant.stop_spacing_h};
  std::string text = R"(# Merit-order baseline: biomass first, storage shifts biomass headroom
# to the peaks, gas covers the rest.
block load input
block E input
block since_stop input
block u output
block Pb output
block Pch output
block Pdis output

)";
  text += biomass_rules(s, rbc, "load");
  text += fmt::format(R"(
# biomass set point: load plus charging, within the operating range
block bio_dem sum
block bio_sat saturation min={bmin} max={bmax}
block bio_cmd mul
load.y -> bio_dem.a
bio_charge.y -> bio_dem.b
bio_dem.y -> bio_sat.u
bio_sat.y -> bio_cmd.a
commit.y -> bio_cmd.b

# discharge whatever biomass cannot cover
block deficit sum kb=-1
block dis_raw saturation min=0 max={pw}
block dis min
load.y -> deficit.a
bio_cmd.y -> deficit.b
deficit.y -> dis_raw.u
dis_raw.y -> dis.a
stored_p.y -> dis.b

commit.y -> u.u
bio_cmd.y -> Pb.u
bio_charge.y -> Pch.u
dis.y -> Pdis.u
)",
                      fmt::arg("bmin", s.bmin), fmt::arg("bmax", s.bmax),
                      fmt::arg("pw", s.power));
  return text;
}

std::string rbc_logic_b(const PlantParamsB& plant, const RbcParams& rbc) {
  plant.validate();
  check(rbc);
  const Sizes s{plant.biomass_min_mw(), plant.biomass_max_mw, plant.storage_capacity_mwh,
                plant.storage_power_mw, plant.stop_spacing_h};
  const double threshold =
      rbc.price_threshold > 0.0 ? rbc.price_threshold : plant.biomass_price * plant.cop;
  std::string text = fmt::format(R"(# Price-threshold baseline: cheap electricity runs the heat pump first
# and fills the tank; otherwise biomass leads and the tank covers peaks.
block load input
block E input
block since_stop input
block price_el input
block u output
block Pb output
block Pch output
block Pdis output

block threshold const value={thr}
block cheap lt
block dear not
price_el.y -> cheap.a
threshold.y -> cheap.b
cheap.y -> dear.u

# load left for biomass: all of it, or what the heat pump cannot take
block hp_max const value={hp_max}
block zero const value=0
block after_hp sum kb=-1
block after_hp_pos max
block bio_load switch
load.y -> after_hp.a
hp_max.y -> after_hp.b
after_hp.y -> after_hp_pos.a
zero.y -> after_hp_pos.b
cheap.y -> bio_load.cond
after_hp_pos.y -> bio_load.a
load.y -> bio_load.b

)",
                                 fmt::arg("thr", threshold), fmt::arg("hp_max", plant.hp_max_mw));
  text += biomass_rules(s, rbc, "bio_load");
  text += fmt::format(R"(
# cheap hours: heat pump headroom fills the tank
block hp_head sum kb=-1
block hp_ch_raw saturation min=0 max={pw}
block hp_charge min
hp_max.y -> hp_head.a
load.y -> hp_head.b
hp_head.y -> hp_ch_raw.u
hp_ch_raw.y -> hp_charge.a
room_p.y -> hp_charge.b
block charge switch
cheap.y -> charge.cond
hp_charge.y -> charge.a
bio_charge.y -> charge.b

# biomass set point (it only charges the tank in dear hours)
block own_ch mul
bio_charge.y -> own_ch.a
dear.y -> own_ch.b
block bio_dem sum
block bio_sat saturation min={bmin} max={bmax}
block bio_cmd mul
bio_load.y -> bio_dem.a
own_ch.y -> bio_dem.b
bio_dem.y -> bio_sat.u
bio_sat.y -> bio_cmd.a
commit.y -> bio_cmd.b

# the tank covers what biomass cannot, and in cheap hours only what the
# heat pump cannot either
block hp_share mul
block covered sum
block deficit sum kb=-1
block dis_raw saturation min=0 max={pw}
block dis min
hp_max.y -> hp_share.a
cheap.y -> hp_share.b
bio_cmd.y -> covered.a
hp_share.y -> covered.b
load.y -> deficit.a
covered.y -> deficit.b
deficit.y -> dis_raw.u
dis_raw.y -> dis.a
stored_p.y -> dis.b

commit.y -> u.u
bio_cmd.y -> Pb.u
charge.y -> Pch.u
dis.y -> Pdis.u
)",
                      fmt::arg("bmin", s.bmin), fmt::arg("bmax", s.bmax),
                      fmt::arg("pw", s.power));
  return text;
}

}  // namespace dhcosim::plants
