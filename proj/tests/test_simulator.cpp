#include <doctest.h>

#include "support.hpp"

#include "episodic/simulator.hpp"

using namespace episodic;

namespace {

ModelParams renewal(const HazardSpec& hazard, double alpha = 0.3) {
    ModelParams p = testing::study_params();
    p.alpha = alpha;
    p.gamma = 0.0;
    p.mu1 = 0.0;
    p.mu0 = 0.0;
    p.hazard = hazard;
    return p;
}

} // namespace

TEST_CASE("same seed gives the same trajectory") {
    const auto p = testing::study_params();
    const auto a = simulate(p, 50.0, 7);
    const auto b = simulate(p, 50.0, 7);
    const auto c = simulate(p, 50.0, 8);
    CHECK(a.events.times() == b.events.times());
    CHECK(a.events.marks() == b.events.marks());
    CHECK(a.labels.labels == b.labels.labels);
    CHECK(a.events.times() != c.events.times());
}

TEST_CASE("trajectories are valid marked sequences") {
    std::mt19937_64 rng(4);
    for (int i = 0; i < 10; ++i) {
        const auto p = testing::random_params(rng, i % 2 ? HazardFamily::Sinusoidal : HazardFamily::CyclicBSpline,
                                              i % 3 ? OffspringFamily::Exponential : OffspringFamily::Weibull);
        const auto sim = simulate(p, 20.0, static_cast<std::uint64_t>(i));
        const auto& e = sim.events;
        REQUIRE(sim.labels.labels.size() == e.size());
        if (!e.empty()) {
            CHECK(sim.labels.labels[0] == 1);
            CHECK(e.time(0) > 0.0);
            CHECK(e.time(e.size() - 1) <= 20.0);
        }
        for (std::size_t l = 1; l < e.size(); ++l) {
            CHECK(e.time(l) > e.time(l - 1));
        }
        CHECK_NOTHROW((void)decompose(e, sim.labels));
    }
}

TEST_CASE("renewal case with a constant hazard") {
    const double rate = 4.0;
    const auto p = renewal(HazardSpec::sinusoidal({std::log(rate), 0.0, 0.0}));
    const auto sim = simulate(p, 5000.0, 1);
    const auto& e = sim.events;
    for (int y : sim.labels.labels) {
        CHECK(y == 1);
    }
    const auto gaps = e.gaps();
    double mean = 0.0;
    for (double g : gaps) {
        mean += g / static_cast<double>(gaps.size());
    }
    const double se = (1.0 / rate) / std::sqrt(static_cast<double>(gaps.size()));
    CHECK(std::abs(mean - 1.0 / rate) < 4.0 * se);
    double ones = 0.0;
    for (int m : e.marks()) {
        ones += m;
    }
    const double n = static_cast<double>(e.size());
    CHECK(std::abs(ones / n - p.alpha) < 4.0 * std::sqrt(p.alpha * (1 - p.alpha) / n));
}

TEST_CASE("thinning reproduces the parent survival function") {
    const auto p = renewal(HazardSpec::sinusoidal({0.5, -1.0, 0.8}));
    const Hazard h(p.hazard);
    const std::vector<double> probes{0.1, 0.3, 0.6, 1.0};
    std::vector<double> survived(probes.size(), 0.0);
    const int runs = 20000;
    for (int r = 0; r < runs; ++r) {
        const auto sim = simulate(p, 2.0, static_cast<std::uint64_t>(r));
        const double first = sim.events.empty() ? 3.0 : sim.events.time(0);
        for (std::size_t k = 0; k < probes.size(); ++k) {
            survived[k] += first > probes[k] ? 1.0 : 0.0;
        }
    }
    for (std::size_t k = 0; k < probes.size(); ++k) {
        const double expected = std::exp(-h.integral(0.0, probes[k]));
        const double observed = survived[k] / runs;
        CHECK(std::abs(observed - expected) < 4.0 * std::sqrt(expected * (1 - expected) / runs));
    }
}

TEST_CASE("episode composition matches the model") {
    const auto p = testing::study_params();
    const auto sim = simulate(p, 3000.0, 5);
    const auto dec = decompose(sim.events, sim.labels);
    const double k = static_cast<double>(dec.episodes.size());
    double events = 0.0, sq = 0.0, segments = 0.0, original = 0.0;
    for (const auto& ep : dec.episodes) {
        const double size = static_cast<double>(ep.last - ep.first + 1);
        events += size;
        sq += size * size;
        segments += static_cast<double>(ep.segments.size());
        original += ep.segments.front().type;
    }
    const double mean = events / k;
    const double sd = std::sqrt(sq / k - mean * mean);
    CHECK(std::abs(mean - expected_events_per_episode(p)) < 4.0 * sd / std::sqrt(k));
    CHECK(std::abs(segments / k - (1.0 + p.gamma)) < 4.0 * std::sqrt(p.gamma / k));
    CHECK(std::abs(original / k - p.alpha) < 4.0 * std::sqrt(p.alpha * (1 - p.alpha) / k));

    std::array<double, 2> gap_sum{}, gap_count{};
    for (std::size_t l = 0; l < sim.events.size(); ++l) {
        if (sim.labels.labels[l] == 0) {
            const auto z = static_cast<std::size_t>(sim.events.mark(l));
            gap_sum[z] += sim.events.gap(l);
            gap_count[z] += 1;
        }
    }
    for (int z : {0, 1}) {
        const auto zi = static_cast<std::size_t>(z);
        const double m = p.offspring(z).mean();
        CHECK(std::abs(gap_sum[zi] / gap_count[zi] - m) < 4.0 * m / std::sqrt(gap_count[zi]));
    }
}

TEST_CASE("offspring gap sampler") {
    auto rng = make_rng(3);
    const auto law = OffspringLaw::weibull(0.8, 0.2);
    const int n = 100000;
    double sum = 0.0, sq = 0.0;
    for (int i = 0; i < n; ++i) {
        const double g = sample_offspring_gap(law, rng);
        CHECK(g >= 0.0);
        sum += g;
        sq += g * g;
    }
    const double mean = sum / n;
    const double sd = std::sqrt(sq / n - mean * mean);
    CHECK(std::abs(mean - law.mean()) < 4.0 * sd / std::sqrt(n));
}

TEST_CASE("hazard majorant bounds the hazard") {
    std::mt19937_64 rng(2);
    for (int i = 0; i < 10; ++i) {
        const auto spec = testing::random_hazard(rng, i % 2 ? HazardFamily::Sinusoidal : HazardFamily::CyclicBSpline);
        const double bound = hazard_majorant(spec);
        for (int k = 0; k <= 3000; ++k) {
            CHECK(evaluate(spec, k / 3000.0 + 0.5 / 3000.0) <= bound);
        }
    }
    CHECK_THROWS_AS((void)hazard_majorant(HazardSpec::sinusoidal({40.0})), std::overflow_error);
}

TEST_CASE("truncation policies") {
    auto p = testing::study_params();
    p.mu0 = 3.0;
    p.mu1 = 3.0;
    p.offspring1 = OffspringLaw::exponential(2.0);
    p.offspring0 = OffspringLaw::exponential(2.0);
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const auto strict = simulate(p, 3.0, seed, TruncationPolicy::Strict);
        const auto drop = simulate(p, 3.0, seed, TruncationPolicy::Drop);
        for (const auto* s : {&strict, &drop}) {
            if (!s->events.empty()) {
                CHECK(s->events.time(s->events.size() - 1) <= 3.0);
            }
        }
    }
    CHECK_THROWS_AS((void)simulate(p, 0.0, 1), std::invalid_argument);
    CHECK_THROWS_AS((void)simulate(p, -2.0, 1), std::invalid_argument);
    auto bad = p;
    bad.alpha = 1.5;
    CHECK_THROWS_AS((void)simulate(bad, 5.0, 1), std::invalid_argument);
}

TEST_CASE("strict truncation keeps whole episodes") {
    auto p = testing::study_params();
    p.gamma = 0.0;
    p.mu1 = 5.0;
    p.mu0 = 5.0;
    p.offspring1 = OffspringLaw::exponential(1.0);
    p.offspring0 = OffspringLaw::exponential(1.0);
    // without truncation the final episode tends to be cut short
    double strict_last = 0.0, drop_last = 0.0;
    for (std::uint64_t seed = 0; seed < 300; ++seed) {
        for (auto [policy, total] : {std::pair{TruncationPolicy::Strict, &strict_last},
                                     std::pair{TruncationPolicy::Drop, &drop_last}}) {
            const auto sim = simulate(p, 2.0, seed, policy);
            const auto dec = decompose(sim.events, sim.labels);
            if (!dec.episodes.empty()) {
                *total += static_cast<double>(dec.episodes.back().last - dec.episodes.back().first + 1);
            }
        }
    }
    CHECK(strict_last > drop_last);
}
