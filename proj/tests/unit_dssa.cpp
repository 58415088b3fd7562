#include <doctest.h>

#include <deque>
#include <map>

#include "biopepad/dssa.hpp"
#include "testutil.hpp"

using namespace biopepad;

TEST_SUITE_BEGIN("dssa");

namespace {

DssaModel toy_model() {
    static SystemSpec spec = testutil::parse_or_die(testutil::kToyText);
    return DssaModel::compile(spec);
}

DssaModel cell_cycle_model() {
    static SystemSpec spec = testutil::parse_or_die(testutil::kCellCycleText);
    return DssaModel::compile(spec);
}

}  // namespace

TEST_CASE("the initial state encodes the process leaves") {
    auto model = toy_model();
    auto state = initial_state(model);
    CHECK(state.time == 0.0);
    CHECK(state.counts == std::vector<std::int64_t>{3, 0});
    CHECK(state.pending.empty());

    auto cc = cell_cycle_model();
    CHECK(initial_state(cc).counts == std::vector<std::int64_t>{120, 100});
}

TEST_CASE("toy propensity at (3,0) is 1.5") {
    auto model = toy_model();
    auto state = initial_state(model);
    auto a = propensities(state, model);
    REQUIRE(a.size() == 1);
    CHECK(a[0] == doctest::Approx(1.5).epsilon(1e-12));
}

TEST_CASE("an exhausted toy state has zero propensity") {
    auto model = toy_model();
    auto state = initial_state(model);
    state.counts = {0, 0};
    CHECK(propensities(state, model)[0] == 0.0);
}

TEST_CASE("cell-cycle propensities are the mass-action rates") {
    auto model = cell_cycle_model();
    auto state = initial_state(model);
    auto a = propensities(state, model);
    REQUIRE(a.size() == 4);
    CHECK(a[0] == doctest::Approx(0.2 * 120));   // alpha
    CHECK(a[1] == doctest::Approx(0.15 * 100));  // beta
    CHECK(a[2] == doctest::Approx(0.05 * 120));  // gamma
    CHECK(a[3] == doctest::Approx(0.09 * 100));  // delta
}

TEST_CASE("propensities equal the functional rate of the same context") {
    auto model = cell_cycle_model();
    auto state = initial_state(model);
    RngStream rng(3);
    for (int i = 0; i < 20; ++i) {
        state.counts[0] = static_cast<std::int64_t>(rng.next_u64() % 50);
        state.counts[1] = static_cast<std::int64_t>(rng.next_u64() % 50);
        auto a = propensities(state, model);
        for (std::size_t idx = 0; idx < model.actions().size(); ++idx) {
            const auto& action = model.actions()[idx];
            RateContext ctx;
            for (const auto& p : action.participants)
                ctx.push_back({model.species()[p.species], p.role, state.counts[p.species],
                               p.stoich});
            bool blocked = false;
            for (const auto& p : action.participants)
                if ((p.role == RoleOp::Reactant || p.role == RoleOp::Activator) &&
                    state.counts[p.species] < p.stoich)
                    blocked = true;
            if (!blocked) CHECK(a[idx] == eval_rate(action.name, ctx, model.spec()));
        }
    }
}

TEST_CASE("capacity modes gate propensities like the start relation") {
    auto spec = testutil::parse_or_die(R"(
param k = 1.0;
species X : max = 5, init = 3;
species Y : max = 2, init = 1;
rate a = MA(k);
delay a = 1.0;
X = (a, 1) << X;
Y = (a, 1) >> Y;
system X[3] <a> Y[1];
)");
    auto strict = DssaModel::compile(spec, CapacityMode::Strict);
    auto literal = DssaModel::compile(spec, CapacityMode::Literal);
    auto state = initial_state(strict);
    state.pending_products[1] = 1;  // one Y already in flight
    CHECK(propensities(state, strict)[0] == 0.0);   // 1 + 1 + 1 > 2
    CHECK(propensities(state, literal)[0] > 0.0);   // 1 + 1 <= 2
}

TEST_CASE("the first toy step consumes the reactant and schedules the product") {
    auto model = toy_model();
    auto state = initial_state(model);
    RngStream rng(11);
    auto ev = step(state, model, rng);
    CHECK(ev.kind == StepKind::Started);
    CHECK(state.counts == std::vector<std::int64_t>{2, 0});
    REQUIRE(state.pending.size() == 1);
    CHECK(state.pending.top().completion_time == doctest::Approx(state.time + 2.0));
    CHECK(state.pending_products[1] == 1);
}

TEST_CASE("with zero propensity the only move is the pending completion") {
    auto model = toy_model();
    auto state = initial_state(model);
    state.counts = {0, 2};
    PendingEvent ev;
    ev.completion_time = 7.25;
    ev.action = 0;
    ev.product_additions = {{1, 1}};
    state.pending.push(ev);
    state.pending_products[1] = 1;

    RngStream rng(5);
    auto result = step(state, model, rng);
    CHECK(result.kind == StepKind::Completed);
    CHECK(state.time == 7.25);
    CHECK(state.counts == std::vector<std::int64_t>{0, 3});
    CHECK(state.pending.empty());
    CHECK(rng.draws() == 0);  // nothing was sampled
}

TEST_CASE("zero-delay actions apply the whole column at once") {
    auto spec = testutil::parse_or_die(testutil::kToyText);
    for (auto& d : spec.delays) d.delay = 0.0;
    auto model = DssaModel::compile(spec);
    auto state = initial_state(model);
    RngStream rng(5);
    auto ev = step(state, model, rng);
    CHECK(ev.kind == StepKind::FiredImmediate);
    CHECK(state.counts == std::vector<std::int64_t>{2, 1});
    CHECK(state.pending.empty());
}

TEST_CASE("every toy run ends in (0,3) after three starts and completions") {
    auto model = toy_model();
    for (std::uint64_t seed = 1; seed <= 25; ++seed) {
        auto trajectory = simulate(model, 1000.0, seed);
        REQUIRE_FALSE(trajectory.samples.empty());
        CHECK(trajectory.samples.front().event == "initial");
        CHECK(trajectory.samples.back().counts == std::vector<std::int64_t>{0, 3});
        int starts = 0, completes = 0;
        for (const auto& s : trajectory.samples) {
            starts += s.event == "start(alpha)";
            completes += s.event == "complete(alpha)";
        }
        CHECK(starts == 3);
        CHECK(completes == 3);
    }
}

TEST_CASE("a zero-length horizon yields only the initial sample") {
    auto model = toy_model();
    auto trajectory = simulate(model, 0.0, 1);
    REQUIRE(trajectory.samples.size() == 1);
    CHECK(trajectory.samples[0].event == "initial");
}

TEST_CASE("the same seed replays the same trajectory") {
    auto model = cell_cycle_model();
    auto a = simulate(model, 2.0, 99);
    auto b = simulate(model, 2.0, 99);
    REQUIRE(a.samples.size() == b.samples.size());
    for (std::size_t i = 0; i < a.samples.size(); ++i) {
        CHECK(a.samples[i].time == b.samples[i].time);
        CHECK(a.samples[i].event == b.samples[i].event);
        CHECK(a.samples[i].counts == b.samples[i].counts);
    }
}

TEST_CASE("clocks are monotone; zero-delay pairs share their timestamp") {
    auto spec = testutil::parse_or_die(testutil::kCellCycleText);
    auto model = DssaModel::compile(spec);
    auto trajectory = simulate(model, 1.0, 7);
    for (std::size_t i = 1; i < trajectory.samples.size(); ++i) {
        const auto& prev = trajectory.samples[i - 1];
        const auto& cur = trajectory.samples[i];
        CHECK(cur.time >= prev.time);
        if (cur.time == prev.time) {
            // only a start(x)/complete(x) collapsed pair may coincide
            CHECK(prev.event.substr(0, 5) == "start");
            CHECK(cur.event.substr(0, 8) == "complete");
        }
    }
}

TEST_CASE("delay-as-duration bookkeeping on toy trajectories") {
    auto model = toy_model();
    for (std::uint64_t seed = 1; seed <= 50; ++seed) {
        auto trajectory = simulate(model, 1000.0, seed);
        int pending = 0;
        std::deque<double> start_times;
        for (const auto& s : trajectory.samples) {
            if (s.event == "start(alpha)") {
                ++pending;
                start_times.push_back(s.time);
            } else if (s.event == "complete(alpha)") {
                --pending;
                REQUIRE_FALSE(start_times.empty());
                // completions happen exactly sigma' after their start, in order
                CHECK(s.time == doctest::Approx(start_times.front() + 2.0).epsilon(1e-12));
                start_times.pop_front();
            }
            CHECK(s.counts[0] + s.counts[1] + pending == 3);
            CHECK(pending >= 0);
        }
    }
}

TEST_CASE("an ensemble of one equals the single trajectory on the grid") {
    auto model = toy_model();
    auto stats = ensemble(model, 10.0, 1, 42, 1.0);
    RngStream derived = RngStream::for_run(42, 0);
    auto single = simulate(model, 10.0, derived.seed(), {Recording::Mode::Grid, 1.0});
    REQUIRE(stats.times.size() == single.samples.size());
    for (std::size_t i = 0; i < stats.times.size(); ++i) {
        CHECK(stats.mean[i * 2 + 0] == static_cast<double>(single.samples[i].counts[0]));
        CHECK(stats.mean[i * 2 + 1] == static_cast<double>(single.samples[i].counts[1]));
        CHECK(stats.variance[i * 2] == 0.0);
    }
}

TEST_CASE("ensemble means respect conservation and monotone conversion") {
    auto model = toy_model();
    auto stats = ensemble(model, 30.0, 400, 7, 1.0, 2);
    const std::size_t points = stats.times.size();
    double prev_a = 1e9, prev_b = -1.0;
    for (std::size_t i = 0; i < points; ++i) {
        const double a = stats.mean[i * 2 + 0];
        const double b = stats.mean[i * 2 + 1];
        // pending instances make up the difference to the initial total
        CHECK(a + b <= 3.0 + 1e-9);
        CHECK(a <= prev_a + 1e-9);
        CHECK(b >= prev_b - 1e-9);
        prev_a = a;
        prev_b = b;
    }
    // by t = 30 virtually every run has absorbed
    CHECK(stats.mean[(points - 1) * 2 + 0] == doctest::Approx(0.0).epsilon(0.05));
    CHECK(stats.mean[(points - 1) * 2 + 1] == doctest::Approx(3.0).epsilon(0.05));
}

TEST_CASE("ensemble aggregation does not depend on the job count") {
    auto model = cell_cycle_model();
    auto one = ensemble(model, 1.0, 40, 5, 0.5, 1);
    auto four = ensemble(model, 1.0, 40, 5, 0.5, 4);
    CHECK(one.mean == four.mean);
    CHECK(one.variance == four.variance);
}

TEST_CASE("trajectory CSV carries header, events and counts") {
    auto model = toy_model();
    auto csv = trajectory_csv(simulate(model, 1000.0, 3));
    CHECK(csv.rfind("time,event,A,B\n", 0) == 0);
    CHECK(csv.find("start(alpha)") != std::string::npos);
    CHECK(csv.find("complete(alpha)") != std::string::npos);
    CHECK(csv.find(",0,3\n") != std::string::npos);
}

TEST_CASE("ensemble CSV has mean and variance columns per species") {
    auto model = toy_model();
    auto csv = ensemble_csv(ensemble(model, 2.0, 3, 1, 1.0));
    CHECK(csv.rfind("time,A_mean,A_var,B_mean,B_var\n", 0) == 0);
}

TEST_SUITE_END();
