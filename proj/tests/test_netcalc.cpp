#include <doctest.h>

#include "burst/metrics.hpp"
#include "burst/minplus.hpp"
#include "burst/rng.hpp"
#include "burst/trace.hpp"

using namespace burst;

namespace {

Curve random_curve(Rng& rng, std::int64_t bins, std::int64_t bin_ns = 1000,
                   std::int64_t max_step = 1000) {
    std::vector<std::uint64_t> v(bins + 1);
    v[0] = 0;
    for (std::int64_t k = 0; k < bins; ++k)
        v[k + 1] = v[k] + static_cast<std::uint64_t>(rng.uniform_int(0, max_step));
    return Curve(TimeGrid(bin_ns, bins), std::move(v));
}

// Definition-level oracle, evaluated pointwise.
std::uint64_t convolve_at(const Curve& f, const Curve& g, std::int64_t t) {
    std::uint64_t best = f.values[t] + g.values[0];
    for (std::int64_t s = 0; s <= t; ++s)
        best = std::min(best, f.values[s] + g.values[t - s]);
    return best;
}

std::uint64_t deconvolve_at(const Curve& f, const Curve& g, std::int64_t t) {
    const std::int64_t n = f.points();
    std::int64_t best = static_cast<std::int64_t>(f.values[t]);
    for (std::int64_t s = 0; t + s < n; ++s) {
        const std::int64_t d =
            static_cast<std::int64_t>(f.values[t + s]) - static_cast<std::int64_t>(g.values[s]);
        best = std::max(best, d);
    }
    return static_cast<std::uint64_t>(best);
}

Curve periodic_burst_curve(std::int64_t burst_bytes, std::int64_t period_bins,
                           std::int64_t bins, std::int64_t bin_ns = 1000) {
    std::vector<std::uint64_t> per_bin(bins, 0);
    for (std::int64_t k = 0; k < bins; k += period_bins)
        per_bin[k] = static_cast<std::uint64_t>(burst_bytes);
    return ArrivalFunction::from_bins(TimeGrid(bin_ns, bins), per_bin).cumulative;
}

}  // namespace

TEST_CASE("convolution with the zero curve collapses to zero") {
    Rng rng(42);
    const Curve f = random_curve(rng, 32);
    const Curve zero = Curve::zeros(f.grid);
    const Curve out = minplus_convolve(f, zero);
    for (auto v : out.values) CHECK(v == 0);
}

TEST_CASE("convolution of linear rate curves takes the smaller slope") {
    TimeGrid grid(1000, 64);
    const Curve f = rate_curve(3'000'000'000, grid);  // 3 GB/s
    const Curve g = rate_curve(1'000'000'000, grid);
    const Curve out = minplus_convolve(f, g);
    CHECK(out == g);
}

TEST_CASE("convolution matches the direct definition on random curves") {
    Rng rng(7);
    for (int rep = 0; rep < 20; ++rep) {
        const auto bins = rng.uniform_int(1, 64);
        const Curve f = random_curve(rng, bins);
        const Curve g = random_curve(rng, bins);
        const Curve out = minplus_convolve(f, g);
        for (std::int64_t t = 0; t < out.points(); ++t)
            REQUIRE(out.values[t] == convolve_at(f, g, t));
    }
}

TEST_CASE("convolution commutes and is associative") {
    Rng rng(11);
    for (int rep = 0; rep < 10; ++rep) {
        const auto bins = rng.uniform_int(1, 48);
        const Curve a = random_curve(rng, bins);
        const Curve b = random_curve(rng, bins);
        const Curve c = random_curve(rng, bins);
        CHECK(minplus_convolve(a, b) == minplus_convolve(b, a));
        CHECK(minplus_convolve(minplus_convolve(a, b), c) ==
              minplus_convolve(a, minplus_convolve(b, c)));
    }
}

TEST_CASE("grid mismatch is rejected") {
    const Curve f = Curve::zeros(TimeGrid(1000, 8));
    const Curve g = Curve::zeros(TimeGrid(2000, 8));
    const Curve h = Curve::zeros(TimeGrid(1000, 9));
    CHECK_THROWS_AS(minplus_convolve(f, g), InvariantError);
    CHECK_THROWS_AS(minplus_deconvolve(f, h), InvariantError);
}

TEST_CASE("deconvolution of a linear curve with itself is the identity") {
    TimeGrid grid(1000, 64);
    const Curve f = rate_curve(2'000'000'000, grid);
    CHECK(minplus_deconvolve(f, f) == f);
}

TEST_CASE("self-deconvolution of a periodic burst train is the staircase") {
    const std::int64_t L = 5000, P = 8, bins = 64;
    const Curve a = periodic_burst_curve(L, P, bins);
    const Curve e = minplus_deconvolve(a, a);
    for (std::int64_t p = 0; p <= bins; ++p) {
        const std::uint64_t expect = static_cast<std::uint64_t>(L) * ((p + P - 1) / P);
        CHECK(e.values[p] == expect);
    }
}

TEST_CASE("deconvolution matches the direct definition on random curves") {
    Rng rng(13);
    for (int rep = 0; rep < 20; ++rep) {
        const auto bins = rng.uniform_int(1, 64);
        const Curve f = random_curve(rng, bins);
        const Curve g = random_curve(rng, bins);
        const Curve out = minplus_deconvolve(f, g);
        for (std::int64_t t = 0; t < out.points(); ++t)
            REQUIRE(out.values[t] == deconvolve_at(f, g, t));
    }
}

TEST_CASE("self-deconvolution is subadditive") {
    Rng rng(17);
    const Curve a = random_curve(rng, 48);
    const Curve e = minplus_deconvolve(a, a);
    for (std::int64_t s = 0; s < e.points(); ++s)
        for (std::int64_t t = 0; s + t < e.points(); ++t)
            REQUIRE(e.values[s + t] <= e.values[s] + e.values[t]);
}

TEST_CASE("rate curve evaluates linearly and starts at zero") {
    TimeGrid grid(1'000'000, 16);  // 1 ms bins
    const Curve s = rate_curve(1'000'000'000, grid);
    CHECK(s.values[0] == 0);
    CHECK(s.values[5] == 5'000'000);  // 5 MB after 5 ms at 1 GB/s
    CHECK_THROWS_AS(rate_curve(0, grid), InvariantError);
    CHECK_THROWS_AS(rate_curve(-5, grid), InvariantError);
}

TEST_CASE("departures through an exact rate server stay below arrivals") {
    Rng rng(23);
    for (int rep = 0; rep < 10; ++rep) {
        const Curve a = random_curve(rng, 64);
        const Curve s = rate_curve(rng.uniform_int(1, 1'000'000) * 1000, a.grid);
        const Curve d = minplus_convolve(a, s);
        CHECK(d.nondecreasing());
        for (std::int64_t t = 0; t < d.points(); ++t) REQUIRE(d.values[t] <= a.values[t]);
    }
}

TEST_CASE("convolution with a rate curve equals the queue-departure recursion") {
    // D = A (x) S against D = A - B with B from the backlog recursion: two
    // independent code paths for the same server.
    Rng rng(29);
    for (int rep = 0; rep < 10; ++rep) {
        const auto bins = rng.uniform_int(4, 128);
        ArrivalFunction a;
        {
            std::vector<std::uint64_t> per_bin(bins);
            for (auto& b : per_bin)
                b = static_cast<std::uint64_t>(rng.uniform_int(0, 2000));
            a = ArrivalFunction::from_bins(TimeGrid(1000, bins), per_bin);
        }
        // Rate chosen so the per-bin drain is a whole number of bytes.
        const std::int64_t r = rng.uniform_int(1, 2000) * 1'000'000;
        const Curve d = minplus_convolve(a.cumulative, rate_curve(r, a.grid()));
        const auto backlog = backlog_series(a, r);
        for (std::int64_t t = 0; t < d.points(); ++t) {
            const auto b_bytes = static_cast<std::uint64_t>(backlog[t] / kNanobytesPerByte);
            REQUIRE(backlog[t] % kNanobytesPerByte == 0);
            REQUIRE(d.values[t] == a.cumulative.values[t] - b_bytes);
        }
    }
}
