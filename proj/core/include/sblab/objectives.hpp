#pragma once

#include "sblab/schedule.hpp"

#include <string>
#include <vector>

namespace sblab {

enum class Direction { Forward, Backward };

const char* direction_name(Direction d);

// The four training targets. Iptm and Ipfm require a normalized schedule.
enum class ObjectiveKind { DsbOriginal, Ipmm, Iptm, Ipfm };

const char* objective_name(ObjectiveKind k);
ObjectiveKind objective_from_name(const std::string& name);

// Conditional mean/variance (isotropic) of one chain step given the
// current state and the pinned endpoint, under the zero-drift Brownian
// reference. k indexes the transition: backward predicts state k from
// state k+1 (pinned endpoint x_0), forward predicts state k+1 from
// state k (pinned endpoint x_N).
struct PosteriorParams {
    std::vector<double> mean;
    double variance = 0.0;
};

PosteriorParams posterior_params(Direction dir, int k,
                                 const std::vector<double>& pinned_state,
                                 const std::vector<double>& current_state,
                                 const GammaSchedule& sched);

// Next-state regression target: backward (input x_{k+1}, target x_k),
// forward (input x_k, target x_{k+1}). States are rows of a trajectory.
struct TuplePoint {
    std::vector<double> input;
    std::vector<double> target;
};

// `states` is the (N+1) x d row-major state array of one trajectory.
TuplePoint ipmm_target(Direction dir, int k, const std::vector<double>& states, int d);
TuplePoint iptm_target(Direction dir, int k, const std::vector<double>& states, int d);
TuplePoint ipfm_target(Direction dir, int k, const std::vector<double>& states, int d,
                       const GammaSchedule& sched);

// Original two-evaluation target built from the partner model's step-mean
// map: backward target = x_{k+1} + F(k, x_k) - F(k, x_{k+1}), forward
// target = x_k + B(k+1, x_{k+1}) - B(k+1, x_k). The partner values are
// passed in already evaluated (the caller owns batching of the two calls).
std::vector<double> dsb_original_target(Direction dir,
                                        const std::vector<double>& x_k,
                                        const std::vector<double>& x_k1,
                                        const std::vector<double>& partner_at_xk,
                                        const std::vector<double>& partner_at_xk1);

// Map a terminus prediction to the step mean:
// backward: x + (gamma_{k+1}/gammabar_{k+1}) (out - x)
// forward:  x + (gamma_{k+1}/(1 - gammabar_k)) (out - x)
std::vector<double> terminus_to_mean(Direction dir, int k, const std::vector<double>& x,
                                     const std::vector<double>& net_output,
                                     const GammaSchedule& sched);

// Map a terminus-direction (flow) prediction to the step mean:
// x + gamma_{k+1} * out, both directions.
std::vector<double> flow_to_mean(Direction dir, int k, const std::vector<double>& x,
                                 const std::vector<double>& net_output,
                                 const GammaSchedule& sched);

// Scalar coefficients behind the transforms; the hot training path uses
// these directly instead of the vector helpers.
double terminus_mean_coeff(Direction dir, int k, const GammaSchedule& sched);
double flow_mean_coeff(Direction dir, int k, const GammaSchedule& sched);

} // namespace sblab
