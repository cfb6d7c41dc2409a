#pragma once

#include <vector>

#include <Eigen/Dense>

#include "phgrid/model.hpp"
#include "phgrid/scenario.hpp"

namespace phgrid {

/// Evaluates the direct vector field over an ensemble of states. The serial
/// and parallel paths compute identical results; the parallel path threads
/// over ensemble members with OpenMP when it is available.
std::vector<Eigen::VectorXd> direct_rhs_batch(const MultiMachineModel& model,
                                              const std::vector<Eigen::VectorXd>& states,
                                              const std::vector<Eigen::VectorXd>& inputs,
                                              bool parallel);

/// Same ensemble evaluated through the assembled (J - R) grad H + g u route.
std::vector<Eigen::VectorXd> ph_rhs_batch(const MultiMachineModel& model,
                                          const PHStructure& ph,
                                          const std::vector<Eigen::VectorXd>& states,
                                          const std::vector<Eigen::VectorXd>& inputs,
                                          bool parallel);

/// Max over the ensemble of the infinity-norm gap between the two routes.
double max_rhs_mismatch(const MultiMachineModel& model, const PHStructure& ph,
                        const std::vector<Eigen::VectorXd>& states,
                        const std::vector<Eigen::VectorXd>& inputs, bool parallel);

struct BasinSample {
  double radius = 0.0;
  unsigned seed = 0;
  bool integrated = false;
  bool converged = false;
  double final_omega_inf = 0.0;
};

/// Integrates an ensemble of seeded random perturbations around the closed
/// loop steady state and reports which return to frequency regulation.
/// Ensemble members are independent, so the parallel path threads over them.
std::vector<BasinSample> basin_probe(const ScenarioConfig& cfg,
                                     const std::vector<double>& radii,
                                     int samples_per_radius, double omega_tol,
                                     bool parallel);

bool openmp_enabled();
int openmp_max_threads();

}  // namespace phgrid
