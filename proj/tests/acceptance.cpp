// Acceptance suite: end-to-end checks of the shipped models and commands,
// each printed as a single pass/fail line. Exits nonzero if any fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <deque>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <set>
#include <sstream>
#include <thread>
#include <vector>

#include <json.hpp>

#include "biopepad/cli.hpp"
#include "biopepad/dde.hpp"
#include "biopepad/dssa.hpp"
#include "biopepad/parser.hpp"
#include "biopepad/slts_io.hpp"
#include "testutil.hpp"

using namespace biopepad;
namespace fs = std::filesystem;

namespace {

const std::string kToyPath = std::string(BIOPEPAD_MODELS_DIR) + "/toy.biopepad";
const std::string kCellCyclePath = std::string(BIOPEPAD_MODELS_DIR) + "/cell_cycle.biopepad";

fs::path g_workdir;

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

struct Failure {
    std::string detail;
};

void expect(bool condition, const std::string& detail) {
    if (!condition) throw Failure{detail};
}

// --- 1. toy transition system --------------------------------------------

ScheduleEntry entry(std::int64_t level, const char* action, RoleOp role) {
    return {level, 1, action, role};
}

Configuration toy_config(std::int64_t a, std::vector<std::int64_t> a_starts, std::int64_t b,
                         std::vector<std::int64_t> b_starts) {
    Configuration cfg;
    cfg.leaves.resize(2);
    cfg.leaves[0].level = a;
    for (auto l : a_starts) cfg.leaves[0].schedule.push_back(entry(l, "alpha", RoleOp::Reactant));
    cfg.leaves[1].level = b;
    for (auto l : b_starts) cfg.leaves[1].schedule.push_back(entry(l, "alpha", RoleOp::Product));
    return cfg;
}

void criterion_toy_slts() {
    // Independent closure over (A, B, pending) first: counts to match.
    auto abstract = testutil::toy_abstract_closure();
    expect(abstract.states.size() == 10, "abstract closure should have 10 states");
    expect(abstract.start_edges.size() == 6 && abstract.complete_edges.size() == 6,
           "abstract closure should have 6+6 edges");

    auto spec = testutil::parse_or_die(slurp(kToyPath));
    auto tree = ProcessTree::compile(spec);
    auto slts = explore_slts(spec, tree);
    expect(!slts.truncated, "toy exploration must not truncate");
    expect(slts.states.size() == 10,
           "expected 10 states, got " + std::to_string(slts.states.size()));
    expect(slts.edges.size() == 12,
           "expected 12 transitions, got " + std::to_string(slts.edges.size()));

    const std::vector<Configuration> expected{
        toy_config(3, {}, 0, {}),              toy_config(2, {3}, 0, {0}),
        toy_config(2, {}, 1, {}),              toy_config(1, {3, 2}, 0, {0, 0}),
        toy_config(1, {2}, 1, {1}),            toy_config(1, {}, 2, {}),
        toy_config(0, {3, 2, 1}, 0, {0, 0, 0}), toy_config(0, {2, 1}, 1, {1, 1}),
        toy_config(0, {1}, 2, {2}),            toy_config(0, {}, 3, {}),
    };
    for (const auto& want : expected) {
        bool found = false;
        for (const auto& got : slts.states) found |= got == want;
        expect(found, "state " + state_label(want, tree) +
                          " with its expected schedule lists is missing");
    }

    // the edge structure projects onto the independent closure
    auto project = [&](const Configuration& c) {
        return testutil::ToyAbstractState{static_cast<int>(c.leaves[0].level),
                                          static_cast<int>(c.leaves[1].level),
                                          static_cast<int>(pending_instances(c, tree))};
    };
    std::set<std::pair<testutil::ToyAbstractState, testutil::ToyAbstractState>> starts, completes;
    for (const auto& e : slts.edges) {
        auto edge = std::make_pair(project(slts.states[e.from]), project(slts.states[e.to]));
        (e.phase == Phase::Start ? starts : completes).insert(edge);
    }
    expect(starts == abstract.start_edges, "start edges disagree with the closure");
    expect(completes == abstract.complete_edges, "completion edges disagree with the closure");

    // and the command-line surface reports the same numbers
    cli::ExploreOptions opts;
    opts.model_path = kToyPath;
    opts.format = "json";
    opts.out_path = (g_workdir / "toy.slts.json").string();
    std::ostringstream out, err;
    expect(cli::cmd_explore(opts, out, err) == cli::kExitOk, "explore exit code: " + err.str());
    expect(out.str().find("10 states, 12 transitions") != std::string::npos,
           "explore should report '10 states, 12 transitions', said: " + out.str());
}

// --- 2. cell-cycle DDE export ---------------------------------------------

using Term = std::pair<double, std::vector<std::tuple<std::string, double, int>>>;

Term term(double coeff, std::vector<std::tuple<std::string, double, int>> factors) {
    std::sort(factors.begin(), factors.end());
    return {coeff, std::move(factors)};
}

std::multiset<Term> term_set(const DdeSystem& sys, std::size_t variable) {
    std::multiset<Term> out;
    for (const auto& t : equation_terms(sys, variable)) {
        auto mono = monomial_of(*t.law);
        expect(mono.has_value(), "kinetic law is not a monomial");
        out.insert({t.coefficient * mono->coefficient, mono->factors});
    }
    return out;
}

void criterion_cell_cycle_dde() {
    auto spec = testutil::parse_or_die(slurp(kCellCyclePath));
    auto sys = derive_dde(spec);
    const double sigma = 0.1;

    const std::multiset<Term> t_i{term(2.0, {{"a4", 0.0, 1}, {"T_M", 0.0, 1}}),
                                  term(-1.0, {{"d2", 0.0, 1}, {"T_I", 0.0, 1}}),
                                  term(-1.0, {{"a1", 0.0, 1}, {"T_I", sigma, 1}})};
    const std::multiset<Term> t_m{term(1.0, {{"a1", 0.0, 1}, {"T_I", sigma, 1}}),
                                  term(-1.0, {{"d3", 0.0, 1}, {"T_M", 0.0, 1}}),
                                  term(-1.0, {{"a4", 0.0, 1}, {"T_M", 0.0, 1}})};
    expect(term_set(sys, 0) == t_i, "dT_I/dt terms differ from the expected equation");
    expect(term_set(sys, 1) == t_m, "dT_M/dt terms differ from the expected equation");

    cli::DdeOptions opts;
    opts.model_path = kCellCyclePath;
    std::ostringstream out, err;
    expect(cli::cmd_dde(opts, out, err) == cli::kExitOk, "dde export exit code: " + err.str());
    expect(out.str().find("dT_I/dt") != std::string::npos, "missing dT_I equation");
    expect(out.str().find("dT_M/dt") != std::string::npos, "missing dT_M equation");
}

// --- 3. integrator accuracy ------------------------------------------------

DdeSystem delayed_decay_system() {
    DdeSystem sys;
    sys.variables = {"x"};
    sys.stoich.species = {"x"};
    sys.stoich.actions = {"decay"};
    sys.stoich.entries = {-1};
    sys.kinetic_laws = {make_var("x", 1.0)};
    sys.delays = {1.0};
    sys.max_delay = 1.0;
    HistorySpec h;
    h.is_constant = true;
    h.constant = 1.0;
    h.expr = make_number(1.0);
    sys.history = {h};
    return sys;
}

void criterion_integrator() {
    auto sys = delayed_decay_system();
    auto grid = solve_dde(sys, 2.0, 1e-3);
    auto value_at = [&](double t) {
        const std::size_t row =
            grid.first_solution_row + static_cast<std::size_t>(std::llround(t / grid.dt));
        return grid.values[row];
    };
    expect(std::abs(value_at(1.0) - 0.0) < 1e-6,
           "x(1) = " + format_double(value_at(1.0)) + ", expected 0 within 1e-6");
    expect(std::abs(value_at(2.0) - (-0.5)) < 1e-6,
           "x(2) = " + format_double(value_at(2.0)) + ", expected -0.5 within 1e-6");

    // order check on a horizon where the solution is no longer polynomial
    // of RK4-exact degree
    testutil::DelayedDecayOracle oracle(8);
    auto max_error = [&](double step) {
        auto g = solve_dde(sys, 8.0, step);
        double worst = 0.0;
        for (std::size_t row = g.first_solution_row; row < g.times.size(); ++row)
            worst = std::max(worst, std::abs(g.values[row] - oracle(g.times[row])));
        return worst;
    };
    const double coarse = max_error(0.05);
    const double fine = max_error(0.025);
    expect(coarse > 1e-13, "coarse error too close to roundoff to measure order");
    const double ratio = coarse / fine;
    expect(ratio > 8.0 && ratio < 32.0,
           "error ratio " + format_double(ratio) + " not in the 4th-order band [8, 32]");
}

// --- 4. zero-delay SSA equivalence ------------------------------------------

void criterion_ssa_equivalence() {
    // three-reaction cycle X -> Y -> Z -> X with zero delays
    auto spec = testutil::parse_or_die(R"(
param k1 = 1.0;
param k2 = 2.0;
param k3 = 3.0;
step = 1.0;
species X : max = 200, init = 50;
species Y : max = 200, init = 30;
species Z : max = 200, init = 20;
rate r1 = MA(k1);
rate r2 = MA(k2);
rate r3 = MA(k3);
delay r1 = 0; delay r2 = 0; delay r3 = 0;
X = (r1, 1) << X + (r3, 1) >> X;
Y = (r1, 1) >> Y + (r2, 1) << Y;
Z = (r2, 1) >> Z + (r3, 1) << Z;
system (X[50] <r1> Y[30]) <r2, r3> Z[20];
)");
    auto model = DssaModel::compile(spec);

    // Same reaction list in the model's action order (first appearance:
    // r1, r3, r2), over species (X, Y, Z).
    testutil::RefSsa reference;
    reference.counts = {50, 30, 20};
    reference.reactions = {
        {1.0, {{0, 1}}, {{1, 1}}},  // r1: X -> Y
        {3.0, {{2, 1}}, {{0, 1}}},  // r3: Z -> X
        {2.0, {{1, 1}}, {{2, 1}}},  // r2: Y -> Z
    };
    {
        const auto& actions = model.actions();
        expect(actions.size() == 3 && actions[0].name == "r1" && actions[1].name == "r3" &&
                   actions[2].name == "r2",
               "unexpected action order in the compiled model");
    }

    const std::uint64_t seed = 20250808;
    RngStream dssa_rng(seed);
    RngStream ref_rng(seed);
    SimState state = initial_state(model);

    // Both sides accumulate time the same way, so the (reaction, waiting
    // time) sequences agree exactly iff reaction indices and absolute event
    // times agree bit for bit.
    const int steps = 100000;
    for (int i = 0; i < steps; ++i) {
        StepEvent ev = step(state, model, dssa_rng);
        expect(ev.kind == StepKind::FiredImmediate, "zero-delay step must fire immediately");
        auto [ref_reaction, ref_tau] = reference.step(ref_rng);
        (void)ref_tau;
        expect(ev.action == ref_reaction,
               "reaction diverged at step " + std::to_string(i));
        expect(state.time == reference.time,
               "event time diverged at step " + std::to_string(i));
        expect(state.counts[0] == reference.counts[0] &&
                   state.counts[1] == reference.counts[1] &&
                   state.counts[2] == reference.counts[2],
               "counts diverged at step " + std::to_string(i));
    }
}

// --- 5. delay-as-duration invariants ----------------------------------------

void criterion_delay_as_duration() {
    auto spec = testutil::parse_or_die(slurp(kToyPath));
    auto model = DssaModel::compile(spec);
    for (std::uint64_t seed = 1; seed <= 1000; ++seed) {
        auto trajectory = simulate(model, 1000.0, seed);
        expect(trajectory.samples.back().counts == std::vector<std::int64_t>{0, 3},
               "seed " + std::to_string(seed) + " did not end at (0,3)");
        int starts = 0, completes = 0, pending = 0;
        std::deque<double> start_times;
        for (const auto& s : trajectory.samples) {
            if (s.event == "start(alpha)") {
                ++starts;
                ++pending;
                start_times.push_back(s.time);
            } else if (s.event == "complete(alpha)") {
                ++completes;
                --pending;
                expect(!start_times.empty(), "completion without a start");
                expect(std::abs(s.time - (start_times.front() + 2.0)) < 1e-9,
                       "completion not exactly sigma' after its start");
                start_times.pop_front();
            }
            expect(s.counts[0] + s.counts[1] + pending == 3,
                   "A + B + pending != 3 during seed " + std::to_string(seed));
        }
        expect(starts == 3 && completes == 3,
               "seed " + std::to_string(seed) + " saw " + std::to_string(starts) + " starts, " +
                   std::to_string(completes) + " completions");
    }
}

// --- 6. stochastic/deterministic agreement ----------------------------------

void criterion_mean_vs_dde() {
    auto spec = testutil::parse_or_die(slurp(kCellCyclePath));
    auto model = DssaModel::compile(spec);
    const double t_end = 10.0;
    const std::size_t runs = 10000;
    auto stats = ensemble(model, t_end, runs, 424242, 1.0,
                          std::max(1u, std::thread::hardware_concurrency()));

    auto sys = derive_dde(spec);
    auto grid = solve_dde(sys, t_end, 0.01);
    auto dde_at = [&](double t, std::size_t var) {
        const std::size_t row =
            grid.first_solution_row + static_cast<std::size_t>(std::llround(t / grid.dt));
        return grid.values[row * sys.variables.size() + var];
    };

    for (int checkpoint = 1; checkpoint <= 10; ++checkpoint) {
        const double t = static_cast<double>(checkpoint);
        const std::size_t row = static_cast<std::size_t>(checkpoint);
        for (std::size_t var = 0; var < 2; ++var) {
            const double mean = stats.mean[row * 2 + var];
            const double reference = dde_at(t, var);
            expect(reference > 1.0, "deterministic reference nears zero; checkpoints invalid");
            const double deviation = std::abs(mean - reference) / reference;
            char buf[160];
            std::snprintf(buf, sizeof(buf),
                          "t=%g %s: ensemble mean %.3f vs DDE %.3f (%.2f%% off)", t,
                          sys.variables[var].c_str(), mean, reference, 100.0 * deviation);
            expect(deviation <= 0.05, buf);
        }
    }
}

// --- 7. round-trip and determinism -------------------------------------------

void criterion_roundtrip_determinism() {
    for (const auto& path : {kToyPath, kCellCyclePath}) {
        auto spec = testutil::parse_or_die(slurp(path));
        auto again = testutil::parse_or_die(serialize_model(spec));
        expect(spec == again, "parse(serialize(.)) differs for " + path);
    }

    cli::SimulateOptions opts;
    opts.model_path = kCellCyclePath;
    opts.t_end = 2.0;
    opts.seed = 9;
    opts.out_path = (g_workdir / "det_a.csv").string();
    std::ostringstream out, err;
    expect(cli::cmd_simulate(opts, out, err) == cli::kExitOk, "simulate failed: " + err.str());
    opts.out_path = (g_workdir / "det_b.csv").string();
    expect(cli::cmd_simulate(opts, out, err) == cli::kExitOk, "simulate failed: " + err.str());
    expect(slurp((g_workdir / "det_a.csv").string()) ==
               slurp((g_workdir / "det_b.csv").string()),
           "same seed gave different CSV bytes");
}

}  // namespace

int main() {
    g_workdir = fs::temp_directory_path() / "biopepad_acceptance";
    fs::create_directories(g_workdir);

    struct Criterion {
        const char* name;
        std::function<void()> run;
    };
    const std::vector<Criterion> criteria{
        {"1 toy-model SLTS matches the expected 10-state table", criterion_toy_slts},
        {"2 cell-cycle DDE export matches the expected equations", criterion_cell_cycle_dde},
        {"3 integrator hits the delayed-decay closed form at 4th order", criterion_integrator},
        {"4 zero-delay DSSA equals the classic SSA for 1e5 steps", criterion_ssa_equivalence},
        {"5 delay-as-duration invariants over 1000 toy runs", criterion_delay_as_duration},
        {"6 cell-cycle ensemble mean within 5% of the DDE solution", criterion_mean_vs_dde},
        {"7 model round-trips and seed-determinism", criterion_roundtrip_determinism},
    };

    int failures = 0;
    for (const auto& criterion : criteria) {
        const auto begin = std::chrono::steady_clock::now();
        std::string detail;
        bool ok = true;
        try {
            criterion.run();
        } catch (const Failure& f) {
            ok = false;
            detail = f.detail;
        } catch (const std::exception& e) {
            ok = false;
            detail = std::string("exception: ") + e.what();
        }
        const double seconds =
            std::chrono::duration_cast<std::chrono::duration<double>>(
                std::chrono::steady_clock::now() - begin)
                .count();
        std::printf("[%s] criterion %s (%.2fs)%s%s\n", ok ? "PASS" : "FAIL", criterion.name,
                    seconds, detail.empty() ? "" : " — ", detail.c_str());
        std::fflush(stdout);
        failures += !ok;
    }

    std::error_code ec;
    fs::remove_all(g_workdir, ec);

    if (failures) {
        std::printf("%d of %zu criteria failed\n", failures, criteria.size());
        return 1;
    }
    std::printf("all %zu criteria passed\n", criteria.size());
    return 0;
}
