#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <complex>

#include "frametuner/autotune.hpp"
#include "frametuner/frame.hpp"

using namespace frametuner;
using Catch::Approx;
using cd = std::complex<double>;

namespace {

void check_report_well_formed(const TuneReport& rep, std::size_t depth_limit) {
    REQUIRE(std::isfinite(rep.displacement));
    REQUIRE(std::isfinite(rep.initial_distance));
    REQUIRE(std::isfinite(rep.final_distance));
    REQUIRE(rep.depth <= depth_limit);
    if (rep.outcome == TuneOutcome::op_split) {
        REQUIRE(rep.partition.has_value());
        REQUIRE(rep.children.size() == 2);
    }
    for (const TuneReport& child : rep.children) {
        REQUIRE(child.depth == rep.depth + 1);
        check_report_well_formed(child, depth_limit);
    }
}

}  // namespace

TEST_CASE("paper_epsilon") {
    SECTION("zero distance disables monitoring") {
        REQUIRE(paper_epsilon(2, 4, 0.0) == 0.0);
    }
    SECTION("small distance stays below the clamp") {
        const double eps = paper_epsilon(2, 4, 1e-14);
        const double expect = std::pow(2.0, 1.5) * std::pow(3.0, 3.0 / 7.0) *
                              std::pow(2.0, 11.0 / 7.0) * 1e-6;
        REQUIRE(eps == Approx(expect).epsilon(1e-12));
        REQUIRE(eps < 0.25);
    }
    SECTION("large distance clamps to 1/(2M)") {
        REQUIRE(paper_epsilon(2, 4, 10.0) == Approx(0.25));
        REQUIRE(paper_epsilon(3, 6, 10.0) == Approx(1.0 / 6.0));
    }
}

TEST_CASE("TheoremConstants") {
    const TheoremConstants tc = TheoremConstants::make(2, 5);
    REQUIRE(tc.coprime_epsilon == Approx(1.0 / 160000.0).epsilon(1e-14));
    REQUIRE(tc.coprime_gate_sq == Approx(0.25));
    REQUIRE(tc.noncoprime_gate ==
            Approx(1.0 / (std::pow(2.0, 21.0) * std::pow(2.0, 27.0) * std::pow(5.0, 14.0)))
                .epsilon(1e-12));
    REQUIRE(tc.coprime_displacement_coeff(1.0 / 20.0) ==
            Approx(4.0 * std::pow(2.0, 20.0) * std::pow(5.0, 8.5) / 0.5).epsilon(1e-12));
    REQUIRE(tc.jump_displacement_bound(0.1) ==
            Approx(std::sqrt(10.0) * std::cbrt(0.2)).epsilon(1e-12));
}

TEST_CASE("restrict_to_subspace") {
    SECTION("standard basis truncation") {
        Matrix<double> block(3, 2);
        block(0, 0) = 0.6;
        block(1, 0) = 0.8;
        block(1, 1) = 1.0;
        Matrix<double> basis(3, 2);
        basis(0, 0) = 1.0;
        basis(1, 1) = 1.0;
        const Frame<double> restricted = restrict_to_subspace(block, basis);
        REQUIRE(restricted.space_dim() == 2);
        REQUIRE(restricted.synthesis()(0, 0) == Approx(0.6));
        REQUIRE(restricted.synthesis()(1, 0) == Approx(0.8));
        REQUIRE(restricted.synthesis()(1, 1) == Approx(1.0));
    }
    SECTION("round-trip through embed") {
        const Frame<cd> inner_frame = random_frame<cd>(2, 5, 3);
        // Build an orthonormal basis from a harmonic frame operator's
        // eigenvectors (any unitary's first two columns work).
        const auto eig = hermitian_eig(frame_operator(random_frame<cd>(4, 6, 9)));
        Matrix<cd> basis(4, 2);
        for (std::size_t m = 0; m < 4; ++m) {
            basis(m, 0) = eig.eigenvectors(m, 0);
            basis(m, 1) = eig.eigenvectors(m, 1);
        }
        const Matrix<cd> lifted = matmul(basis, inner_frame.synthesis());
        const Frame<cd> back = restrict_to_subspace(lifted, basis);
        REQUIRE(hs_norm(back.synthesis() - inner_frame.synthesis()) <= 1e-9);
        const Matrix<cd> relifted = embed_from_subspace(back, basis);
        REQUIRE(hs_norm(relifted - lifted) <= 1e-9);
    }
    SECTION("two copies of e2 restricted to span{e2}") {
        Matrix<double> block(2, 2);
        block(1, 0) = 1.0;
        block(1, 1) = 1.0;
        Matrix<double> basis(2, 1);
        basis(1, 0) = 1.0;
        const Frame<double> restricted = restrict_to_subspace(block, basis);
        REQUIRE(restricted.space_dim() == 1);
        REQUIRE(restricted.count() == 2);
        REQUIRE(restricted.synthesis()(0, 0) == Approx(1.0));
        REQUIRE(distance_from_tightness(restricted) < 1e-12);
    }
    SECTION("rejects vectors outside the subspace") {
        Matrix<double> block(2, 1);
        block(0, 0) = 1.0;
        Matrix<double> basis(2, 1);
        basis(1, 0) = 1.0;
        REQUIRE_THROWS_AS(restrict_to_subspace(block, basis), std::invalid_argument);
    }
    SECTION("rejects a non-orthonormal basis") {
        Matrix<double> block(2, 1);
        block(0, 0) = 1.0;
        Matrix<double> basis(2, 1);
        basis(0, 0) = 0.5;
        REQUIRE_THROWS_AS(restrict_to_subspace(block, basis), std::invalid_argument);
    }
}

TEST_CASE("tune_coprime") {
    DescentConfig cfg;
    cfg.step = default_step(5);
    SECTION("perturbed harmonic (2,5) reaches a UNTF") {
        const Frame<cd> f0 = perturb(harmonic_frame(2, 5), 0.01, 1);
        const TuneResult<cd> res = tune_coprime(f0, cfg);
        REQUIRE(res.report.outcome == TuneOutcome::untf);
        REQUIRE(res.report.final_distance <= 1e-8);
        REQUIRE(res.report.bounds.coprime_path);
        REQUIRE(res.report.displacement <= res.report.bounds.coprime_displacement_bound);
        REQUIRE(res.report.bounds.coprime_epsilon == Approx(1.0 / 160000.0).epsilon(1e-14));
    }
    SECTION("an exact UNTF finishes in zero iterations with zero displacement") {
        const TuneResult<cd> res = tune_coprime(harmonic_frame(2, 5), cfg);
        REQUIRE(res.report.outcome == TuneOutcome::untf);
        REQUIRE(res.report.iterations == 0);
        REQUIRE(res.report.displacement == 0.0);
    }
    SECTION("rejects non-coprime dimensions and failed gates") {
        DescentConfig cfg4;
        cfg4.step = default_step(4);
        REQUIRE_THROWS_AS(tune_coprime(harmonic_frame(2, 4), cfg4), std::invalid_argument);
        // Coprime dimensions but far from tight: rank-deficient direction.
        Matrix<double> syn(2, 3);
        syn(0, 0) = 1.0;
        syn(0, 1) = 1.0;
        syn(0, 2) = 1.0;
        DescentConfig cfg3;
        cfg3.step = default_step(3);
        REQUIRE_THROWS_AS(tune_coprime(Frame<double>(syn), cfg3), std::invalid_argument);
    }
}

TEST_CASE("tune on the example frame performs the descend-and-jump split") {
    DescentConfig cfg;
    cfg.step = default_step(4);
    const TuneResult<double> res = tune(example_theta_frame(0.3), cfg);
    REQUIRE(res.report.outcome == TuneOutcome::op_split);
    REQUIRE(res.report.stop_reason == StopReason::op_detected);
    REQUIRE(res.report.bounds.equal_redundancy);
    REQUIRE(res.report.partition.has_value());
    REQUIRE(res.report.children.size() == 2);
    for (const TuneReport& child : res.report.children) {
        REQUIRE(child.outcome == TuneOutcome::untf);
    }
    // Final frame is two copies of the standard basis.
    const Matrix<double>& syn = res.frame.synthesis();
    REQUIRE(std::abs(syn(0, 0) - 1.0) < 1e-6);
    REQUIRE(std::abs(syn(0, 1) - 1.0) < 1e-6);
    REQUIRE(std::abs(syn(1, 2) - 1.0) < 1e-6);
    REQUIRE(std::abs(syn(1, 3) - 1.0) < 1e-6);
    REQUIRE(res.report.final_distance < 1e-8);
    // Displacement accounting: the report's total matches the frames, and the
    // triangle inequality across phases (descent, jump, trivial children)
    // bounds it.
    REQUIRE(res.report.displacement ==
            Approx(hs_norm(res.frame.synthesis() - example_theta_frame(0.3).synthesis()))
                .margin(1e-9));
    const Frame<double> f0 = example_theta_frame(0.3);
    const double eps = paper_epsilon(2, 4, distance_from_tightness(f0));
    const RunResult<double> descent_phase = run(f0, cfg, eps);
    REQUIRE(descent_phase.trace.reason == StopReason::op_detected);
    const double d_descent = hs_norm(descent_phase.frame.synthesis() - f0.synthesis());
    const JumpResult<double> jump =
        jump_to_op(descent_phase.frame, eps, *descent_phase.trace.op_partition);
    REQUIRE(res.report.displacement <= d_descent + jump.displacement + 1e-9);
}

TEST_CASE("tune dispatches already-tight and coprime inputs") {
    SECTION("harmonic (2,4) is already a UNTF") {
        DescentConfig cfg;
        cfg.step = default_step(4);
        const TuneResult<cd> res = tune(harmonic_frame(2, 4), cfg);
        REQUIRE(res.report.outcome == TuneOutcome::untf);
        REQUIRE(res.report.iterations == 0);
    }
    SECTION("coprime gate routes to the fast path") {
        DescentConfig cfg;
        cfg.step = default_step(5);
        const TuneResult<cd> res = tune(perturb(harmonic_frame(2, 5), 0.02, 8), cfg);
        REQUIRE(res.report.bounds.coprime_path);
        REQUIRE(res.report.outcome == TuneOutcome::untf);
    }
}

TEST_CASE("tune terminates with well-formed reports on near-tight inputs") {
    const std::pair<std::size_t, std::size_t> dims[] = {{2, 4}, {3, 6}};
    for (const auto& [m, n] : dims) {
        for (std::uint64_t seed = 0; seed < 4; ++seed) {
            const Frame<cd> f0 = perturb(harmonic_frame(m, n), 0.02, 100 * m + seed);
            DescentConfig cfg;
            cfg.step = default_step(n);
            const TuneResult<cd> res = tune(f0, cfg);
            check_report_well_formed(res.report, m);
            // Soundness: a silent partial result is not allowed.
            if (res.report.outcome != TuneOutcome::stalled) {
                REQUIRE(res.report.final_distance <= 1e-8);
            }
            for (std::size_t col = 0; col < res.frame.count(); ++col) {
                REQUIRE(norm(res.frame.column(col)) == Approx(1.0).margin(1e-12));
            }
            REQUIRE(res.report.displacement ==
                    Approx(hs_norm(res.frame.synthesis() - f0.synthesis())).margin(1e-9));
        }
    }
}

TEST_CASE("tune handles rough inputs without silent failure") {
    SECTION("critical non-tight frame stalls honestly") {
        Matrix<double> syn(2, 2);
        syn(0, 0) = 1.0;
        syn(0, 1) = 1.0;
        DescentConfig cfg;
        cfg.step = default_step(2);
        const TuneResult<double> res = tune(Frame<double>(syn), cfg);
        REQUIRE(res.report.outcome == TuneOutcome::stalled);
        REQUIRE(res.report.stop_reason == StopReason::gradient_vanished);
    }
    SECTION("raw random frames produce finite reports") {
        for (std::uint64_t seed = 0; seed < 3; ++seed) {
            const Frame<cd> f0 = random_frame<cd>(2, 4, 700 + seed);
            DescentConfig cfg;
            cfg.step = default_step(4);
            const TuneResult<cd> res = tune(f0, cfg);
            check_report_well_formed(res.report, 2);
        }
    }
    SECTION("a split block that cannot span its subspace stalls that branch") {
        // {e1, e1, e1, e3} in R^3: orthogonally partitionable into a spanning
        // 1-D block and a single vector inside a 2-D complement.
        Matrix<double> syn(3, 4);
        syn(0, 0) = 1.0;
        syn(0, 1) = 1.0;
        syn(0, 2) = 1.0;
        syn(2, 3) = 1.0;
        DescentConfig cfg;
        cfg.step = default_step(4);
        const TuneResult<double> res = tune(Frame<double>(syn), cfg);
        REQUIRE(res.report.outcome == TuneOutcome::stalled);
        REQUIRE(res.report.children.size() == 2);
        REQUIRE(res.report.children[0].outcome == TuneOutcome::untf);
        REQUIRE(res.report.children[1].outcome == TuneOutcome::stalled);
        check_report_well_formed(res.report, 3);
    }
}

TEST_CASE("direct sums of equal-redundancy UNTFs are UNTFs") {
    // Block-diagonal union of harmonic (1,2)-style and (1,2)-style pieces in
    // orthogonal subspaces, each with redundancy 2.
    Matrix<cd> syn(2, 4);
    syn(0, 0) = 1.0;
    syn(0, 1) = -1.0;
    syn(1, 2) = cd{0.0, 1.0};
    syn(1, 3) = cd{0.0, -1.0};
    const Frame<cd> f(syn);
    REQUIRE(distance_from_tightness(f) <= 1e-8);
}

TEST_CASE("epsilon policies") {
    DescentConfig cfg;
    cfg.step = default_step(4);
    SECTION("fixed policy clamps to the jump-admissible range") {
        const TuneResult<double> res =
            tune(example_theta_frame(0.3), cfg, EpsilonPolicy::fixed(0.9));
        REQUIRE(res.report.bounds.epsilon_used == Approx(0.25));
        REQUIRE(res.report.bounds.epsilon_clamped);
    }
    SECTION("fixed tiny epsilon turns the monitor off and the budget reports honestly") {
        // The example converges only sublinearly, so with epsilon below any
        // reachable tau the run exhausts its (shortened) budget instead of
        // splitting.
        DescentConfig small = cfg;
        small.max_iter = 20000;
        const TuneResult<double> res =
            tune(example_theta_frame(0.3), small, EpsilonPolicy::fixed(1e-9));
        REQUIRE(res.report.outcome == TuneOutcome::stalled);
        REQUIRE(res.report.stop_reason == StopReason::budget);
        REQUIRE(res.report.iterations == 20000);
    }
    SECTION("experimental recompute-per-check policy still splits the example") {
        EpsilonPolicy policy = EpsilonPolicy::paper();
        policy.recompute_per_check = true;
        const TuneResult<double> res = tune(example_theta_frame(0.3), cfg, policy);
        REQUIRE(res.report.outcome == TuneOutcome::op_split);
    }
}
