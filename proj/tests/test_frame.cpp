#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <complex>
#include <cstdio>

#include "frametuner/frame.hpp"

using namespace frametuner;
using Catch::Approx;
using cd = std::complex<double>;

namespace {

constexpr double kPi = 3.14159265358979323846;

}  // namespace

TEST_CASE("normalize_columns") {
    SECTION("rescales a diagonal matrix") {
        Matrix<double> raw(2, 2);
        raw(0, 0) = 2.0;
        raw(1, 1) = 3.0;
        const Frame<double> f = normalize_columns(raw);
        REQUIRE(f.synthesis()(0, 0) == Approx(1.0));
        REQUIRE(f.synthesis()(1, 1) == Approx(1.0));
    }
    SECTION("idempotent on unit norm input") {
        const Frame<cd> h = harmonic_frame(2, 3);
        const Frame<cd> again = normalize_columns(h.synthesis());
        for (std::size_t i = 0; i < 2; ++i) {
            for (std::size_t j = 0; j < 3; ++j) {
                REQUIRE(std::abs(again.synthesis()(i, j) - h.synthesis()(i, j)) < 1e-15);
            }
        }
    }
    SECTION("(3,4) scales to (0.6, 0.8)") {
        Matrix<double> raw(2, 1);
        raw(0, 0) = 3.0;
        raw(1, 0) = 4.0;
        const Frame<double> f = normalize_columns(raw);
        REQUIRE(f.synthesis()(0, 0) == Approx(0.6));
        REQUIRE(f.synthesis()(1, 0) == Approx(0.8));
    }
    SECTION("zero column is rejected with its index") {
        Matrix<double> raw(2, 3);
        raw(0, 0) = 1.0;
        raw(1, 2) = 1.0;  // column 1 is zero
        REQUIRE_THROWS_WITH(normalize_columns(raw),
                            Catch::Matchers::ContainsSubstring("column 1"));
    }
}

TEST_CASE("Frame construction enforces unit norms") {
    Matrix<double> raw(2, 2);
    raw(0, 0) = 1.0;
    raw(0, 1) = 0.5;
    try {
        Frame<double> f(raw);
        FAIL("expected UnitNormError");
    } catch (const UnitNormError& e) {
        REQUIRE(e.column() == 1);
        REQUIRE(e.column_norm() == Approx(0.5));
    }
}

TEST_CASE("frame_operator") {
    SECTION("orthonormal basis gives the identity") {
        const Frame<double> f(Matrix<double>::identity(3));
        REQUIRE(hs_norm(frame_operator(f) - Matrix<double>::identity(3)) < 1e-15);
    }
    SECTION("repeated column gives diag(2, 0)") {
        Matrix<double> syn(2, 2);
        syn(0, 0) = 1.0;
        syn(0, 1) = 1.0;
        const Frame<double> f(syn);
        const Matrix<double> op = frame_operator(f);
        REQUIRE(op(0, 0) == Approx(2.0));
        REQUIRE(op(1, 1) == Approx(0.0).margin(1e-15));
        REQUIRE(op(0, 1) == Approx(0.0).margin(1e-15));
    }
    SECTION("harmonic frame operator is (N/M) I") {
        const Frame<cd> f = harmonic_frame(2, 3);
        REQUIRE(hs_norm(frame_operator(f) - scale(Matrix<cd>::identity(2), 1.5)) < 1e-14);
    }
    SECTION("trace equals N") {
        for (std::uint64_t seed = 0; seed < 8; ++seed) {
            const Frame<cd> f = random_frame<cd>(3, 7, seed);
            const Matrix<cd> op = frame_operator(f);
            double trace = 0.0;
            for (std::size_t i = 0; i < op.rows(); ++i) trace += real_of(op(i, i));
            REQUIRE(trace == Approx(7.0).margin(1e-9));
        }
    }
}

TEST_CASE("frame_potential") {
    SECTION("orthonormal basis: FP = N") {
        REQUIRE(frame_potential(Frame<double>(Matrix<double>::identity(2))) == Approx(2.0));
    }
    SECTION("harmonic (2,3) meets the N^2/M floor") {
        REQUIRE(frame_potential(harmonic_frame(2, 3)) == Approx(4.5).margin(1e-12));
    }
    SECTION("example frame at pi/6: FP = 8 + 8 sin^4") {
        REQUIRE(frame_potential(example_theta_frame(kPi / 6.0)) == Approx(8.5).margin(1e-12));
    }
    SECTION("brute-force double sum over inner products agrees") {
        for (std::uint64_t seed = 0; seed < 6; ++seed) {
            const Frame<cd> f = random_frame<cd>(3, 6, 50 + seed);
            double fp = 0.0;
            for (std::size_t a = 0; a < f.count(); ++a) {
                for (std::size_t b = 0; b < f.count(); ++b) {
                    fp += abs_sq(inner(f.column(a), f.column(b)));
                }
            }
            REQUIRE(frame_potential(f) == Approx(fp).margin(1e-10));
        }
    }
}

TEST_CASE("distance_from_tightness") {
    SECTION("UNTF distance is zero") {
        REQUIRE(distance_from_tightness(harmonic_frame(3, 7)) < 1e-10);
    }
    SECTION("example frame at pi/6: sqrt(0.5)") {
        REQUIRE(distance_from_tightness(example_theta_frame(kPi / 6.0)) ==
                Approx(std::sqrt(0.5)).margin(1e-12));
    }
    SECTION("repeated vector: diag(2,0) against N/M = 1") {
        Matrix<double> syn(2, 2);
        syn(0, 0) = 1.0;
        syn(0, 1) = 1.0;
        REQUIRE(distance_from_tightness(Frame<double>(syn)) == Approx(std::sqrt(2.0)));
    }
}

TEST_CASE("tightness identity: operator route vs Gram route") {
    // ||FF* - (N/M) I||_HS^2 = FP - N^2/M across random frames.
    std::size_t checked = 0;
    for (std::size_t m = 2; m <= 5; ++m) {
        for (std::size_t n = m; n <= 12; ++n) {
            for (std::uint64_t seed = 0; seed < 6; ++seed) {
                const Frame<cd> f = random_frame<cd>(m, n, 1000 * m + 10 * n + seed);
                const double d = distance_from_tightness(f);
                const double gap = frame_potential(f) - static_cast<double>(n * n) / m;
                REQUIRE(std::abs(d * d - gap) <= 1e-8);
                REQUIRE(gap >= -1e-10);
                ++checked;
            }
        }
    }
    REQUIRE(checked >= 200);
}

TEST_CASE("frame potential floor is attained exactly at tightness") {
    // FP - N^2/M within 1e-9 of zero exactly when the distance is tiny:
    // harmonic frames sit on the floor, perturbed ones rise off it.
    for (const auto& [m, n] : {std::pair<std::size_t, std::size_t>{2, 3}, {3, 7}, {4, 6}}) {
        const Frame<cd> tight = harmonic_frame(m, n);
        const double floor_val = static_cast<double>(n) * static_cast<double>(n) / m;
        REQUIRE(frame_potential(tight) - floor_val <= 1e-9);
        REQUIRE(distance_from_tightness(tight) <= 1e-5);
        const Frame<cd> moved = perturb(tight, 0.1, 5 * m + n);
        const bool on_floor = frame_potential(moved) - floor_val <= 1e-9;
        const bool near_tight = distance_from_tightness(moved) <= 1e-5;
        REQUIRE(on_floor == near_tight);
        REQUIRE_FALSE(near_tight);
    }
}

TEST_CASE("analyze") {
    SECTION("harmonic (3,7) is a UNTF with A = B = 7/3") {
        const FrameAnalysis a = analyze(harmonic_frame(3, 7));
        REQUIRE(a.is_untf);
        REQUIRE(a.lower_frame_bound == Approx(7.0 / 3.0).margin(1e-10));
        REQUIRE(a.upper_frame_bound == Approx(7.0 / 3.0).margin(1e-10));
        double sum = 0.0;
        for (double l : a.eigenvalues) sum += l;
        REQUIRE(sum == Approx(7.0).margin(1e-9));
    }
    SECTION("example frame at pi/6 is not a UNTF") {
        REQUIRE_FALSE(analyze(example_theta_frame(kPi / 6.0)).is_untf);
    }
    SECTION("degenerate sequence has A = 0") {
        Matrix<double> syn(2, 2);
        syn(0, 0) = 1.0;
        syn(0, 1) = 1.0;
        const FrameAnalysis a = analyze(Frame<double>(syn));
        REQUIRE(a.lower_frame_bound == Approx(0.0).margin(1e-12));
        REQUIRE(a.upper_frame_bound == Approx(2.0).margin(1e-12));
    }
    SECTION("rejects nonpositive tolerance") {
        REQUIRE_THROWS_AS(analyze(harmonic_frame(2, 3), 0.0), std::invalid_argument);
    }
}

TEST_CASE("harmonic_frame") {
    SECTION("M = N = 2 is a scaled DFT and a UNTF") {
        const Frame<cd> f = harmonic_frame(2, 2);
        REQUIRE(std::abs(f.synthesis()(0, 0) - cd(1.0 / std::sqrt(2.0), 0.0)) < 1e-15);
        REQUIRE(std::abs(f.synthesis()(1, 1) - cd(-1.0 / std::sqrt(2.0), 0.0)) < 1e-14);
        REQUIRE(distance_from_tightness(f) < 1e-10);
    }
    SECTION("(2,3) and (2,4) are UNTFs") {
        REQUIRE(distance_from_tightness(harmonic_frame(2, 3)) < 1e-12);
        REQUIRE(distance_from_tightness(harmonic_frame(2, 4)) < 1e-12);
    }
    SECTION("M > N is rejected") {
        REQUIRE_THROWS_AS(harmonic_frame(3, 2), std::invalid_argument);
    }
}

TEST_CASE("random_frame") {
    SECTION("deterministic per seed") {
        const Frame<cd> a = random_frame<cd>(3, 7, 42);
        const Frame<cd> b = random_frame<cd>(3, 7, 42);
        REQUIRE(a.synthesis() == b.synthesis());
        const Frame<cd> c = random_frame<cd>(3, 7, 43);
        REQUIRE_FALSE(a.synthesis() == c.synthesis());
    }
    SECTION("columns are unit norm") {
        const Frame<double> f = random_frame<double>(4, 9, 7);
        for (std::size_t n = 0; n < f.count(); ++n) {
            REQUIRE(norm(f.column(n)) == Approx(1.0).margin(1e-12));
        }
    }
    SECTION("wide random frames concentrate near tightness (logged, not asserted)") {
        const Frame<cd> f = random_frame<cd>(2, 100, 11);
        const double ratio = distance_from_tightness(f) / 100.0;
        std::printf("[info] random M=2 N=100 distance/N = %.4f\n", ratio);
        SUCCEED();
    }
}

TEST_CASE("perturb") {
    const Frame<cd> base = harmonic_frame(2, 5);
    SECTION("magnitude zero is the identity") {
        const Frame<cd> same = perturb(base, 0.0, 99);
        REQUIRE(same.synthesis() == base.synthesis());
    }
    SECTION("keeps unit norms and respects the HS budget") {
        const double magnitude = 0.05;
        const Frame<cd> moved = perturb(base, magnitude, 99);
        for (std::size_t n = 0; n < moved.count(); ++n) {
            REQUIRE(norm(moved.column(n)) == Approx(1.0).margin(1e-12));
        }
        REQUIRE(hs_norm(moved.synthesis() - base.synthesis()) <=
                magnitude * std::sqrt(5.0) + 1e-12);
    }
}

TEST_CASE("nearest_tight_frame") {
    SECTION("fixes UNTFs") {
        const Frame<cd> f = harmonic_frame(2, 5);
        REQUIRE(hs_norm(nearest_tight_frame(f) - f.synthesis()) < 1e-9);
    }
    SECTION("output is tight and its displacement scales with the distance") {
        // The polar construction is the Procrustes optimum: its displacement
        // is pinched between d/(2 sqrt(N)) and sqrt(M/N) d.
        const Frame<double> f = example_theta_frame(kPi / 6.0);
        const Matrix<double> tight = nearest_tight_frame(f);
        const Matrix<double> op = matmul(tight, adjoint(tight));
        REQUIRE(hs_norm(op - scale(Matrix<double>::identity(2), 2.0)) < 1e-9);
        const double moved = hs_norm(tight - f.synthesis());
        const double d = distance_from_tightness(f);
        REQUIRE(moved >= d / (2.0 * std::sqrt(4.0)) - 1e-9);
        REQUIRE(moved <= std::sqrt(2.0 / 4.0) * d + 1e-9);
        // Optimality: displacement^2 equals sum (sqrt(lambda) - sqrt(N/M))^2.
        const auto eig = hermitian_eig(frame_operator(f));
        double expect_sq = 0.0;
        for (double l : eig.eigenvalues) {
            const double gap = std::sqrt(l) - std::sqrt(2.0);
            expect_sq += gap * gap;
        }
        REQUIRE(moved * moved == Approx(expect_sq).margin(1e-10));
    }
    SECTION("closed-form check on {e1, e1, e2}") {
        Matrix<double> syn(2, 3);
        syn(0, 0) = 1.0;
        syn(0, 1) = 1.0;
        syn(1, 2) = 1.0;
        const Matrix<double> tight = nearest_tight_frame(Frame<double>(syn));
        const Matrix<double> op = matmul(tight, adjoint(tight));
        REQUIRE(hs_norm(op - scale(Matrix<double>::identity(2), 1.5)) < 1e-9);
        REQUIRE(tight(0, 0) == Approx(std::sqrt(3.0) / 2.0));
        REQUIRE(tight(1, 2) == Approx(std::sqrt(1.5)));
    }
    SECTION("displacement bounds hold on random fixtures") {
        for (std::uint64_t seed = 0; seed < 10; ++seed) {
            const Frame<cd> f = random_frame<cd>(3, 8, 500 + seed);
            const double moved = hs_norm(nearest_tight_frame(f) - f.synthesis());
            const double d = distance_from_tightness(f);
            REQUIRE(moved >= d / (2.0 * std::sqrt(8.0)) - 1e-9);
            REQUIRE(moved <= std::sqrt(3.0 / 8.0) * d + 1e-9);
        }
    }
    SECTION("rank-deficient input is rejected") {
        Matrix<double> syn(2, 2);
        syn(0, 0) = 1.0;
        syn(0, 1) = 1.0;
        REQUIRE_THROWS_AS(nearest_tight_frame(Frame<double>(syn)), std::invalid_argument);
    }
}

TEST_CASE("example_theta fixtures") {
    const double theta = 0.3;
    const Frame<double> f = example_theta_frame(theta);
    REQUIRE(f.space_dim() == 2);
    REQUIRE(f.count() == 4);
    const double d2 = 8.0 * std::pow(std::sin(theta), 4.0);
    REQUIRE(distance_from_tightness(f) == Approx(std::sqrt(d2)).margin(1e-12));
    // The tilde family is tight for every theta.
    REQUIRE(distance_from_tightness(example_theta_tilde_frame(theta)) < 1e-12);
}
