#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <limits>
#include <random>

#include "hom/model.hpp"
#include "hom/verify.hpp"

using namespace hom;
using Catch::Approx;

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

TEST_CASE("coincidence density at reference points") {
  // Perfectly indistinguishable photons never coincide at zero delay.
  PhysicalParams ind{0.0, 1.0, 1.0, 0.0};
  for (double tau : {-3.0, -0.7, 0.0, 0.2, 1.9})
    CHECK(model::coincidence_density(ind, tau) == Approx(0.0).margin(1e-300));

  // Fully distinguishable pair: density 1/sqrt(2 pi) at the origin.
  PhysicalParams dis{0.0, 0.0, 1.0, 0.0};
  CHECK(model::coincidence_density(dis, 0.0) ==
        Approx(1.0 / std::sqrt(2.0 * math::pi)).epsilon(1e-14));

  PhysicalParams p{0.5, 0.9, 1.0, 0.0};
  const double total =
      verify::quad_integrate([&](double t) { return model::coincidence_density(p, t); },
                             -kInf, kInf)
          .value;
  CHECK(total == Approx(0.5 * (1.0 - 0.9 * std::exp(-0.5))).epsilon(1e-10));
  CHECK(total == Approx(0.227061).margin(5e-7));
}

TEST_CASE("bunching density at reference points") {
  PhysicalParams p{0.0, 1.0, 1.0, 0.0};
  CHECK(model::bunching_density(p, 0.0) ==
        Approx(2.0 / std::sqrt(2.0 * math::pi)).epsilon(1e-14));

  // Summed coincidence + bunching density is independent of alpha.
  PhysicalParams q1{0.7, 0.3, 2.0, 0.0};
  PhysicalParams q2{0.7, 0.95, 2.0, 0.0};
  for (double tau : {-1.2, -0.4, 0.0, 0.3, 0.8, 2.5}) {
    const double s1 =
        model::coincidence_density(q1, tau) + model::bunching_density(q1, tau);
    const double s2 =
        model::coincidence_density(q2, tau) + model::bunching_density(q2, tau);
    CHECK(s1 == Approx(s2).epsilon(1e-13));
  }

  PhysicalParams r{0.7, 0.6, 2.0, 0.0};
  CHECK(model::bunching_density(r, 0.3) ==
        Approx(verify::literal_bunching_density(r, 0.3)).epsilon(1e-12));
}

TEST_CASE("total rates") {
  auto t1 = model::total_rates({0.0, 0.9, 1.0, 0.0});
  CHECK(t1.coincidence == Approx(0.05).epsilon(1e-14));
  CHECK(t1.bunching == Approx(0.95).epsilon(1e-14));

  auto t2 = model::total_rates({0.5, 0.9, 1.0, 0.0});
  CHECK(t2.coincidence == Approx(0.227061).margin(5e-7));
  CHECK(t2.bunching == Approx(0.772939).margin(5e-7));
  CHECK(t2.coincidence + t2.bunching == Approx(1.0).epsilon(1e-15));

  // Orthogonal temporal modes: both rates 1/2.
  for (double ds : {4.0, 6.0, 9.0}) {
    auto t = model::total_rates({ds, 0.73, 1.0, 0.0});
    CHECK(std::abs(t.coincidence - 0.5) < 1e-12);
    CHECK(std::abs(t.bunching - 0.5) < 1e-12);
  }
}

TEST_CASE("no-HOM arrival density") {
  PhysicalParams p{0.5, 1.0, 1.0, 0.0};
  CHECK(model::nohom_density(p, 0.5) ==
        Approx(std::sqrt(2.0 / math::pi)).epsilon(1e-14));

  // alpha never enters.
  PhysicalParams q = p;
  q.alpha = 0.1;
  for (double tau : {-0.5, 0.0, 0.4, 1.3})
    CHECK(model::nohom_density(p, tau) == model::nohom_density(q, tau));

  const double norm =
      verify::quad_integrate([&](double t) { return model::nohom_density(p, t); },
                             -kInf, kInf)
          .value;
  CHECK(norm == Approx(1.0).epsilon(1e-10));
}

TEST_CASE("density invariants on randomized parameters") {
  std::mt19937 rng(20240517u);
  std::uniform_real_distribution<double> ud(0.0, 1.0);

  for (int trial = 0; trial < 40; ++trial) {
    PhysicalParams p;
    p.delta = -2.0 + 4.0 * ud(rng);
    p.alpha = ud(rng);
    p.sigma = 0.3 + 2.5 * ud(rng);
    p.gamma = ud(rng);

    for (int k = 0; k < 12; ++k) {
      const double tau = -4.0 / p.sigma + 8.0 / p.sigma * ud(rng);

      const double pc = model::coincidence_density(p, tau);
      const double pb = model::bunching_density(p, tau);
      CHECK(pc >= 0.0);
      CHECK(pb >= 0.0);

      // (delta, tau) -> (-delta, -tau) symmetry.
      PhysicalParams pr = p;
      pr.delta = -p.delta;
      CHECK(pc == Approx(model::coincidence_density(pr, -tau)).margin(1e-300).epsilon(1e-13));
      CHECK(pb == Approx(model::bunching_density(pr, -tau)).margin(1e-300).epsilon(1e-13));
      CHECK(model::nohom_density(p, tau) ==
            Approx(model::nohom_density(pr, -tau)).epsilon(1e-13));

      // Stable three-Gaussian form vs the literal bracket, where it is finite.
      const double arg = 8.0 * p.delta * p.sigma * p.sigma * tau;
      if (arg < 600.0) {
        const double lit = verify::literal_coincidence_density(p, tau);
        if (lit > 1e-280)
          CHECK(pc == Approx(lit).epsilon(1e-12));
      }
    }

    const double norm =
        verify::quad_integrate(
            [&](double t) {
              return model::coincidence_density(p, t) + model::bunching_density(p, t);
            },
            -kInf, kInf)
            .value;
    CHECK(norm == Approx(1.0).epsilon(1e-10));

    const auto tot = model::total_rates(p);
    const double ctot =
        verify::quad_integrate([&](double t) { return model::coincidence_density(p, t); },
                               -kInf, kInf)
            .value;
    CHECK(ctot == Approx(tot.coincidence).margin(1e-9));
  }
}

TEST_CASE("densities rescale with the natural units") {
  // delta -> delta/k, sigma -> k sigma maps densities to k * P(k tau).
  PhysicalParams p{0.6, 0.8, 1.3, 0.0};
  for (double k : {0.25, 2.0, 7.5}) {
    PhysicalParams ps{p.delta / k, p.alpha, p.sigma * k, p.gamma};
    for (double tau : {-0.9, 0.1, 0.55}) {
      CHECK(model::coincidence_density(ps, tau / k) ==
            Approx(k * model::coincidence_density(p, tau)).epsilon(1e-12).margin(1e-300));
      CHECK(model::bunching_density(ps, tau / k) ==
            Approx(k * model::bunching_density(p, tau)).epsilon(1e-12));
    }
    const auto t0 = model::total_rates(p);
    const auto t1 = model::total_rates(ps);
    CHECK(t0.coincidence == Approx(t1.coincidence).epsilon(1e-14).margin(1e-300));
  }
}

TEST_CASE("parameter validation") {
  CHECK_THROWS_AS(model::coincidence_density({0.0, 1.2, 1.0, 0.0}, 0.0), DomainError);
  CHECK_THROWS_AS(model::bunching_density({0.0, 0.5, -1.0, 0.0}, 0.0), DomainError);
  CHECK_THROWS_AS(model::total_rates({0.0, 0.5, 1.0, 1.5}), DomainError);
  CHECK_THROWS_AS(
      model::coincidence_density({std::numeric_limits<double>::quiet_NaN(), 0.5, 1.0, 0.0}, 0.0),
      DomainError);
}
