#include <doctest.h>

#include "tsdm/mgfsm.hpp"

using namespace tsdm::mgfsm;

namespace {
const StrategyParams kRef{};  // 0.65 / 0.55 / 0.92 / 0.01
}

TEST_CASE("score 0.50 below mu2 stops the generator") {
  const MgStatus s = step({State::Active, Reason::Unchanged}, 0.50, 2.0, 2.0, 4.0, kRef);
  CHECK(s.state == State::Stopped);
  CHECK(s.reason == Reason::VeryLowScore);
}

TEST_CASE("score 0.93 above mu3 restarts a stopped generator") {
  const MgStatus s = step({State::Stopped, Reason::VeryLowScore}, 0.93, 2.0, 2.0, 4.0, kRef);
  CHECK(s.state == State::Active);
  CHECK(s.reason == Reason::Restart);
}

TEST_CASE("depth jump beyond gamma with score below mu1 stops") {
  // gamma = 0.01 * 4.0 = 0.04; |2.05 - 2.0| = 0.05 > gamma, score 0.60 < mu1
  const MgStatus s = step({State::Active, Reason::Unchanged}, 0.60, 2.05, 2.0, 4.0, kRef);
  CHECK(s.state == State::Stopped);
  CHECK(s.reason == Reason::DepthJumpLowScore);
}

TEST_CASE("full transition table with the reference thresholds") {
  // score buckets: below mu2, between mu2 and mu1, between mu1 and mu3, above mu3
  const double scores[] = {0.50, 0.60, 0.80, 0.95};
  const bool jumps[] = {false, true};
  const State states[] = {State::Active, State::Stopped};

  for (State st : states) {
    for (bool jump : jumps) {
      const double dt_now = jump ? 2.1 : 2.0;  // gamma = 0.04 on a 4 m frame
      for (double score : scores) {
        const MgStatus out =
            step({st, Reason::Unchanged}, score, dt_now, 2.0, 4.0, kRef);

        State expect;
        if (jump && score < kRef.mu1) expect = State::Stopped;
        else if (score < kRef.mu2) expect = State::Stopped;
        else if (score > kRef.mu3) expect = State::Active;
        else expect = st;
        CAPTURE(int(st));
        CAPTURE(jump);
        CAPTURE(score);
        REQUIRE(out.state == expect);
      }
    }
  }
}

TEST_CASE("a convincing score restarts regardless of depth jump") {
  // score 0.95 > mu3 and also >= mu1, so the jump rule cannot fire
  for (bool jump : {false, true}) {
    const MgStatus s = step({State::Stopped, Reason::VeryLowScore}, 0.95,
                            jump ? 3.0 : 2.0, 2.0, 4.0, kRef);
    CHECK(s.state == State::Active);
  }
}

TEST_CASE("step is pure: same inputs, same outputs") {
  const MgStatus a = step({State::Active, Reason::Unchanged}, 0.7, 2.0, 2.0, 4.0, kRef);
  const MgStatus b = step({State::Active, Reason::Unchanged}, 0.7, 2.0, 2.0, 4.0, kRef);
  CHECK(a.state == b.state);
  CHECK(a.reason == b.reason);
  CHECK(a.state == State::Active);
  CHECK(a.reason == Reason::Unchanged);
}

TEST_CASE("parameter validation") {
  StrategyParams p;
  p.mu2 = 0.7;  // violates mu2 < mu1
  CHECK_THROWS(p.validate());
  StrategyParams q;
  q.gamma_frac = 0.0;
  CHECK_THROWS(q.validate());
  CHECK_NOTHROW(StrategyParams{}.validate());
}

TEST_CASE("nonpositive previous depth is rejected") {
  CHECK_THROWS(step({State::Active, Reason::Unchanged}, 0.7, 2.0, 0.0, 4.0, kRef));
}
