#include "mgfreq/plant.hpp"

#include <cmath>
#include <stdexcept>

#include <fmt/format.h>

namespace mgfreq {

void MicrogridParams::validate() const {
  auto positive = [](double v, const char* name) {
    if (!(v > 0.0) || !std::isfinite(v)) throw std::invalid_argument(fmt::format("{} must be positive, got {}", name, v));
  };
  positive(p_pv1, "p_pv1");
  positive(p_pv2, "p_pv2");
  positive(p_wt1, "p_wt1");
  positive(p_wt2, "p_wt2");
  positive(p_bess, "p_bess");
  positive(p_du, "p_du");
  positive(p_load, "p_load");
  positive(t_pv1, "t_pv1");
  positive(t_pv2, "t_pv2");
  positive(t_wt, "t_wt");
  positive(t_bess, "t_bess");
  positive(t_du1, "t_du1");
  positive(t_du2, "t_du2");
  positive(droop, "droop");
  positive(inertia, "inertia");
  positive(s_base, "s_base");
}

PlantModel build_continuous_model(const MicrogridParams& p) {
  p.validate();
  PlantModel m;
  m.ac = Matrix::Zero(kNumStates, kNumStates);
  m.bc = Matrix::Zero(kNumStates, kNumUnits);
  m.cc = Matrix::Zero(1, kNumStates);
  m.dc = Matrix::Zero(kNumStates, kNumDisturbances);

  const double swing = 1.0 / (2.0 * p.inertia);
  for (int s : {kPv1Power, kPv2Power, kWt1Power, kWt2Power, kDuPower, kBessPower}) m.ac(kFreq, s) = swing;

  // PV: array lag feeding inverter lag.
  m.ac(kPv1Array, kPv1Array) = -1.0 / p.t_pv1;
  m.ac(kPv1Power, kPv1Array) = 1.0 / p.t_pv2;
  m.ac(kPv1Power, kPv1Power) = -1.0 / p.t_pv2;
  m.ac(kPv2Array, kPv2Array) = -1.0 / p.t_pv1;
  m.ac(kPv2Power, kPv2Array) = 1.0 / p.t_pv2;
  m.ac(kPv2Power, kPv2Power) = -1.0 / p.t_pv2;

  m.ac(kWt1Power, kWt1Power) = -1.0 / p.t_wt;
  m.ac(kWt2Power, kWt2Power) = -1.0 / p.t_wt;

  // Diesel: governor with droop feedback, then engine lag.
  m.ac(kDuGovernor, kFreq) = -1.0 / (p.droop * p.t_du1);
  m.ac(kDuGovernor, kDuGovernor) = -1.0 / p.t_du1;
  m.ac(kDuPower, kDuGovernor) = 1.0 / p.t_du2;
  m.ac(kDuPower, kDuPower) = -1.0 / p.t_du2;

  m.ac(kBessPower, kFreq) = p.bess_coupling == BessCoupling::kLiteral ? -1.0 : -1.0 / (p.droop * p.t_bess);
  m.ac(kBessPower, kBessPower) = -1.0 / p.t_bess;

  m.bc(kPv1Array, kPv1) = 1.0 / p.t_pv1;
  m.bc(kPv2Array, kPv2) = 1.0 / p.t_pv1;
  m.bc(kWt1Power, kWt1) = 1.0 / p.t_wt;
  m.bc(kWt2Power, kWt2) = 1.0 / p.t_wt;
  m.bc(kDuGovernor, kDu) = 1.0 / p.t_du1;
  m.bc(kBessPower, kBess) = 1.0 / p.t_bess;

  m.cc(0, kFreq) = 1.0;
  m.dc.row(kFreq).setConstant(-swing);
  return m;
}

PlantModel discretize_model(PlantModel model, double ts) {
  const DiscreteMatrices dm = discretize(model.ac, model.bc, model.dc, ts);
  model.a = dm.a;
  model.b = dm.b;
  model.d = dm.d;
  model.c = model.cc;
  model.ts = ts;
  return model;
}

PlantModel build_plant_model(const MicrogridParams& params, double ts) {
  return discretize_model(build_continuous_model(params), ts);
}

StateVector step_plant(const PlantModel& model, const StateVector& x, const ControlVector& u,
                       const DisturbanceVector& d) {
  if (!model.discretized()) throw std::invalid_argument("step_plant: model is not discretized");
  return model.a * x + model.b * u + model.d * d;
}

Vector step_plant(const PlantModel& model, const Vector& x, const Vector& u, const Vector& d) {
  if (!model.discretized()) throw std::invalid_argument("step_plant: model is not discretized");
  if (x.size() != model.a.rows() || u.size() != model.b.cols() || d.size() != model.d.cols()) {
    throw std::invalid_argument(fmt::format("step_plant: dimension mismatch (x {}, u {}, d {})", x.size(), u.size(),
                                            d.size()));
  }
  return model.a * x + model.b * u + model.d * d;
}

}  // namespace mgfreq
