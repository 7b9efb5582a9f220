#pragma once

#include <cmath>
#include <stdexcept>

namespace tsdm::mgfsm {

// Stop-restart thresholds. gamma (the depth-jump limit) is gamma_frac times
// the current frame's max depth.
struct StrategyParams {
  double mu1 = 0.65;
  double mu2 = 0.55;
  double mu3 = 0.92;
  double gamma_frac = 0.01;

  void validate() const {
    if (!(mu2 < mu1)) throw std::invalid_argument("mu2 must be < mu1");
    if (!(mu3 > mu1)) throw std::invalid_argument("mu3 must be > mu1");
    if (!(gamma_frac > 0.0)) throw std::invalid_argument("gamma_frac must be > 0");
    if (mu1 <= 0.0 || mu3 >= 1.0)
      throw std::invalid_argument("score thresholds must lie in (0,1)");
  }
};

enum class State { Active, Stopped };
enum class Reason { DepthJumpLowScore, VeryLowScore, Restart, Unchanged };

struct MgStatus {
  State state = State::Active;
  Reason reason = Reason::Unchanged;
};

inline const char* to_string(State s) {
  return s == State::Active ? "active" : "stopped";
}

// One transition. Stop rules are evaluated before the restart rule, so a
// frame can never stop and restart at once:
//   (a) depth jump beyond gamma with score < mu1  -> Stopped
//   (b) score < mu2                               -> Stopped
//   (c) score > mu3                               -> Active
//   (d) otherwise unchanged
inline MgStatus step(const MgStatus& status, double score, double dt_now_m,
                     double dt_prev_m, double frame_max_depth_m,
                     const StrategyParams& p) {
  if (dt_prev_m <= 0.0)
    throw std::invalid_argument("previous target depth must be > 0");
  const double gamma = p.gamma_frac * frame_max_depth_m;
  if (std::abs(dt_now_m - dt_prev_m) > gamma && score < p.mu1)
    return {State::Stopped, Reason::DepthJumpLowScore};
  if (score < p.mu2) return {State::Stopped, Reason::VeryLowScore};
  if (score > p.mu3) return {State::Active, Reason::Restart};
  return {status.state, Reason::Unchanged};
}

}  // namespace tsdm::mgfsm
