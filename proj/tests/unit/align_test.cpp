#include <doctest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "vcenergy/align.hpp"
#include "vcenergy/errors.hpp"
#include "vcenergy/sources.hpp"

using namespace vcenergy;

namespace {

PowerTrace trace_of(std::vector<PowerSample> samples, double interval = 1.0) {
    return PowerTrace{"m", std::move(samples), interval};
}

std::vector<std::pair<double, double>> as_pairs(const PowerTrace& t) {
    std::vector<std::pair<double, double>> out;
    for (const auto& s : t.samples) {
        out.emplace_back(s.timestamp, s.power);
    }
    return out;
}

PowerTrace random_trace(std::mt19937_64& rng, int n) {
    std::uniform_real_distribution<double> step(0.05, 1.5);
    std::uniform_real_distribution<double> watts(0.0, 250.0);
    PowerTrace t{"m", {}, 0.5};
    double ts = 1000.0;
    for (int i = 0; i < n; ++i) {
        t.samples.push_back({ts, watts(rng)});
        ts += step(rng);
    }
    return t;
}

} // namespace

TEST_CASE("nearest_timestamp picks the closest sample") {
    const auto t = trace_of({{9.8, 1}, {10.3, 2}});
    CHECK(nearest_timestamp(t, 10.0, 0.5) == 0);
    CHECK(nearest_timestamp(t, 10.2, 0.5) == 1);
    CHECK(nearest_timestamp(t, 20.0, 10.0) == 1);
    CHECK(nearest_timestamp(t, 0.0, 10.0) == 0);
}

TEST_CASE("nearest_timestamp breaks ties toward the earlier sample") {
    const auto t = trace_of({{9.5, 1}, {10.5, 2}});
    CHECK(nearest_timestamp(t, 10.0, 0.5) == 0);
}

TEST_CASE("nearest_timestamp rejects distant samples") {
    const auto t = trace_of({{8.0, 1}});
    CHECK_THROWS_AS(nearest_timestamp(t, 10.0, 0.5), AlignmentError);
    CHECK_THROWS_AS(nearest_timestamp(trace_of({}), 10.0, 0.5), std::invalid_argument);
    CHECK_THROWS_AS(nearest_timestamp(t, 8.0, 0.0), std::invalid_argument);
}

TEST_CASE("extract_window interpolates boundaries") {
    const auto t = trace_of({{0, 0}, {1, 10}, {2, 20}});
    const auto w = extract_window(t, 0.5, 1.5);
    REQUIRE(w.size() == 3);
    CHECK(w.samples[0] == PowerSample{0.5, 5});
    CHECK(w.samples[1] == PowerSample{1, 10});
    CHECK(w.samples[2] == PowerSample{1.5, 15});
    CHECK(w.meter_id == "m");
}

TEST_CASE("extract_window over the full span is the identity") {
    const auto t = trace_of({{0, 0}, {1, 10}, {2, 20}});
    CHECK(extract_window(t, 0, 2).samples == t.samples);
}

TEST_CASE("extract_window errors outside coverage") {
    const auto t = trace_of({{0, 0}, {1, 10}, {2, 20}});
    CHECK_THROWS_AS(extract_window(t, 3, 4), AlignmentError);
    CHECK_THROWS_AS(extract_window(t, -3, 1), AlignmentError);
    CHECK_THROWS_AS(extract_window(t, 1, 1), std::invalid_argument);
}

TEST_CASE("extract_window extends to the nearest sample within max_gap") {
    const auto t = trace_of({{0, 4}, {1, 10}}, 0.5);
    const auto w = extract_window(t, -0.25, 1.4);
    REQUIRE(w.size() == 4);
    CHECK(w.samples.front() == PowerSample{-0.25, 4});
    CHECK(w.samples.back() == PowerSample{1.4, 10});
    CHECK_THROWS_AS(extract_window(t, -0.6, 1.0), AlignmentError);
    CHECK_NOTHROW(extract_window(t, -0.6, 1.0, 1.0));
}

TEST_CASE("a window inside one sampling interval still has two samples") {
    const auto t = trace_of({{0, 0}, {1, 10}});
    const auto w = extract_window(t, 0.25, 0.75);
    REQUIRE(w.size() == 2);
    CHECK(integrate_energy(w).energy == doctest::Approx(2.5));
}

TEST_CASE("integrate_energy basics") {
    const auto constant = synth_trace({{{10.0, 50.0, 50.0}}, 0.0, 1}, 0.5);
    CHECK(integrate_energy(constant).energy == doctest::Approx(500.0).epsilon(1e-12));

    const auto ramp = synth_trace({{{10.0, 0.0, 10.0}}, 0.0, 1}, 1.0);
    const auto r = integrate_energy(ramp);
    CHECK(r.energy == doctest::Approx(50.0).epsilon(1e-12));
    CHECK(r.n_samples == 11);
    CHECK(r.mean_power == doctest::Approx(5.0));
    CHECK(r.std_power == doctest::Approx(std::sqrt(11.0)).epsilon(1e-12));

    const auto w = extract_window(trace_of({{0, 0}, {1, 10}, {2, 20}}), 0.5, 1.5);
    CHECK(integrate_energy(w).energy == doctest::Approx(10.0).epsilon(1e-12));

    CHECK_THROWS_AS(integrate_energy(trace_of({{0, 1}})), InsufficientSamples);
    CHECK_THROWS_AS(integrate_energy(trace_of({})), InsufficientSamples);
}

TEST_CASE("trapezoid matches the fine Riemann sum on piecewise-linear traces") {
    std::mt19937_64 rng(2024);
    for (int trial = 0; trial < 50; ++trial) {
        const auto t = random_trace(rng, 40);
        const double expected = oracle::riemann_energy(as_pairs(t));
        const double got = integrate_energy(t).energy;
        CHECK(std::fabs(got - expected) <= 1e-9 * expected);
    }
}

TEST_CASE("integration is additive at interior samples") {
    std::mt19937_64 rng(5);
    for (int trial = 0; trial < 50; ++trial) {
        const auto t = random_trace(rng, 30);
        const std::size_t k = 1 + rng() % 28;
        PowerTrace left{"m", {t.samples.begin(), t.samples.begin() + k + 1}, 0.5};
        PowerTrace right{"m", {t.samples.begin() + k, t.samples.end()}, 0.5};
        const double whole = integrate_energy(t).energy;
        const double parts = integrate_energy(left).energy + integrate_energy(right).energy;
        CHECK(std::fabs(whole - parts) <= 1e-12 * whole);
    }
}

TEST_CASE("scaling power scales energy") {
    std::mt19937_64 rng(6);
    const auto t = random_trace(rng, 25);
    for (double c : {0.5, 2.0, 4.0, 1024.0}) {
        auto scaled = t;
        for (auto& s : scaled.samples) {
            s.power *= c;
        }
        CHECK(integrate_energy(scaled).energy == c * integrate_energy(t).energy);
    }
}

TEST_CASE("window energy grows with window length") {
    std::mt19937_64 rng(8);
    const auto t = random_trace(rng, 60);
    const double a = t.front_time() + 0.5;
    double previous = 0.0;
    for (double b = a + 0.01; b < t.back_time(); b += 0.37) {
        const double e = integrate_energy(extract_window(t, a, b, 1.5)).energy;
        CHECK(e >= previous);
        previous = e;
    }
}

TEST_CASE("idle baseline is the mean power") {
    CHECK(measure_idle_baseline(synth_trace({{{10.0, 20.0, 20.0}}, 0.0, 1}, 0.5)) == 20.0);
    CHECK(measure_idle_baseline(trace_of({{0, 19}, {1, 21}})) == 20.0);
    CHECK_THROWS_AS(measure_idle_baseline(trace_of({})), InsufficientSamples);
}

TEST_CASE("energy decomposition") {
    SUBCASE("encode") {
        const auto d = decompose_energy(1000, 600, 20, 10, Process::encode);
        CHECK(d.e_x == 200);
        CHECK(d.e_strg == 200);
        CHECK_FALSE(d.residual_negative);
    }
    SUBCASE("decode") {
        const auto d = decompose_energy(1000, 600, 20, 10, Process::decode);
        CHECK(d.e_x == 400);
        CHECK(d.e_strg == 0);
        CHECK_FALSE(d.residual_negative);
    }
    SUBCASE("negative residual is kept and flagged") {
        const auto d = decompose_energy(700, 600, 20, 10, Process::encode);
        CHECK(d.e_strg == -100);
        CHECK(d.residual_negative);
        const auto dec = decompose_energy(500, 600, 20, 10, Process::decode);
        CHECK(dec.e_x == -100);
        CHECK(dec.residual_negative);
    }
    SUBCASE("preconditions") {
        CHECK_THROWS_AS(decompose_energy(-1, 0, 1, 1, Process::encode), std::invalid_argument);
        CHECK_THROWS_AS(decompose_energy(1, 0, 1, 0, Process::encode), std::invalid_argument);
        CHECK_THROWS_AS(decompose_energy(1, 0, 1, 1, Process::idle), std::invalid_argument);
    }
}

TEST_CASE("decomposition identity holds exactly") {
    std::mt19937_64 rng(10);
    std::uniform_real_distribution<double> e(0.0, 5000.0);
    std::uniform_real_distribution<double> p(0.0, 100.0);
    std::uniform_real_distribution<double> d(0.1, 60.0);
    for (int i = 0; i < 1000; ++i) {
        const double total = e(rng);
        const double proc = e(rng);
        const auto enc = decompose_energy(total, proc, p(rng), d(rng), Process::encode);
        CHECK(enc.e_total == total);
        CHECK(enc.e_proc == proc);
        CHECK(enc.e_total - enc.e_proc - enc.e_x == enc.e_strg);
        const auto dec = decompose_energy(total, proc, p(rng), d(rng), Process::decode);
        CHECK(dec.e_strg == 0.0);
        CHECK(dec.e_total - dec.e_proc == dec.e_x);
    }
}
