#include "biopepad/dssa.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <map>
#include <mutex>
#include <sstream>
#include <stdexcept>
#include <thread>

namespace biopepad {

DssaModel DssaModel::compile(const SystemSpec& spec, CapacityMode capacity) {
    DssaModel m;
    m.spec_ = &spec;
    m.capacity_ = capacity;
    m.species_ = spec.species_order();

    std::map<SpeciesId, std::size_t> species_index;
    for (std::size_t i = 0; i < m.species_.size(); ++i) species_index[m.species_[i]] = i;

    m.max_levels_.resize(m.species_.size(), kDefaultMaxLevel);
    m.init_counts_.resize(m.species_.size(), 0);
    for (std::size_t i = 0; i < m.species_.size(); ++i) {
        if (const auto* q = spec.find_quantity(m.species_[i])) {
            m.max_levels_[i] = q->max_level;
            m.init_counts_[i] = q->init_level;
        }
    }
    // The initial process is the authority for starting levels.
    auto walk = [&](auto&& self, const ProcessPtr& p) -> void {
        if (!p) return;
        if (p->is_leaf()) {
            auto it = species_index.find(p->leaf().species);
            if (it != species_index.end()) m.init_counts_[it->second] = p->leaf().init_level;
            return;
        }
        self(self, p->coop().left);
        self(self, p->coop().right);
    };
    walk(walk, spec.initial_process);

    for (const auto& action : spec.action_order()) {
        Action a;
        a.name = action;
        a.delay = spec.delay_of(action).value_or(0.0);
        for (std::size_t s = 0; s < m.species_.size(); ++s) {
            const auto& comp = spec.components[s];
            const PrefixTerm* term = comp.term_for(action);
            if (!term) continue;
            a.participants.push_back({s, term->role, term->stoich});
            if (term->role == RoleOp::Reactant) a.consumed.emplace_back(s, term->stoich);
            if (term->role == RoleOp::Product) a.produced.emplace_back(s, term->stoich);
        }
        m.actions_.push_back(std::move(a));
    }
    return m;
}

SimState initial_state(const DssaModel& model) {
    SimState s;
    s.counts = model.initial_counts();
    s.pending_products.assign(s.counts.size(), 0);
    return s;
}

namespace {

bool start_constraints_hold(const SimState& state, const DssaModel& model,
                            const DssaModel::Action& action) {
    for (const auto& p : action.participants) {
        const std::int64_t level = state.counts[p.species];
        const std::int64_t n = model.max_level(p.species);
        switch (p.role) {
            case RoleOp::Reactant:
            case RoleOp::Activator:
                if (level < p.stoich || level > n) return false;
                break;
            case RoleOp::Modifier:
            case RoleOp::Inhibitor:
                if (level < 1 || level > n) return false;
                break;
            case RoleOp::Product: {
                const std::int64_t committed = level + state.pending_products[p.species];
                if (model.capacity() == CapacityMode::Strict) {
                    if (level < 0 || committed + p.stoich > n) return false;
                } else {
                    if (committed < 0 || committed > n) return false;
                }
                break;
            }
        }
    }
    return true;
}

RateContext context_of(const SimState& state, const DssaModel& model,
                       const DssaModel::Action& action) {
    RateContext ctx;
    ctx.reserve(action.participants.size());
    for (const auto& p : action.participants)
        ctx.push_back({model.species()[p.species], p.role, state.counts[p.species], p.stoich});
    return ctx;
}

void apply_deltas(SimState& state, const DssaModel& model,
                  const std::vector<std::pair<std::size_t, std::int64_t>>& deltas, int sign) {
    for (const auto& [species, kappa] : deltas) {
        state.counts[species] += sign * kappa;
        if (state.counts[species] < 0 || state.counts[species] > model.max_level(species))
            throw std::logic_error("species " + model.species()[species] +
                                   " left [0, max] during simulation");
    }
}

}  // namespace

std::vector<double> propensities(const SimState& state, const DssaModel& model) {
    std::vector<double> a(model.actions().size(), 0.0);
    for (std::size_t i = 0; i < model.actions().size(); ++i) {
        const auto& action = model.actions()[i];
        if (!start_constraints_hold(state, model, action)) continue;
        a[i] = eval_rate(action.name, context_of(state, model, action), model.spec());
    }
    return a;
}

StepEvent step(SimState& state, const DssaModel& model, RngStream& rng, double t_end) {
    const auto a = propensities(state, model);
    double a0 = 0.0;
    for (double v : a) a0 += v;

    if (a0 == 0.0 && state.pending.empty())
        return {StepKind::Quiescent, 0, state.time};

    // Exponential(0) is almost surely infinite; no draw is spent on it.
    const double tau =
        a0 > 0.0 ? rng.exponential(a0) : std::numeric_limits<double>::infinity();
    const double reaction_time = state.time + tau;

    if (!state.pending.empty() && state.pending.top().completion_time <= reaction_time) {
        // A scheduled completion preempts the drawn reaction; the draw is
        // discarded and propensities are recomputed next step.
        const PendingEvent ev = state.pending.top();
        if (ev.completion_time > t_end) {
            state.time = t_end;
            return {StepKind::ReachedEnd, 0, state.time};
        }
        state.pending.pop();
        state.time = ev.completion_time;
        apply_deltas(state, model, ev.product_additions, +1);
        for (const auto& [species, kappa] : ev.product_additions)
            state.pending_products[species] -= kappa;
        return {StepKind::Completed, ev.action, state.time};
    }

    if (reaction_time > t_end) {
        state.time = t_end;
        return {StepKind::ReachedEnd, 0, state.time};
    }

    // Pick the reaction by a linear scan over cumulative propensities.
    const double target = rng.next_unit() * a0;
    std::size_t chosen = a.size();
    double cumulative = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (a[i] <= 0.0) continue;
        cumulative += a[i];
        chosen = i;
        if (target <= cumulative) break;
    }
    if (chosen == a.size()) throw std::logic_error("reaction selection failed");

    const auto& action = model.actions()[chosen];
    state.time = reaction_time;
    if (action.delay == 0.0) {
        apply_deltas(state, model, action.consumed, -1);
        apply_deltas(state, model, action.produced, +1);
        return {StepKind::FiredImmediate, chosen, state.time};
    }
    apply_deltas(state, model, action.consumed, -1);
    PendingEvent ev;
    ev.completion_time = state.time + action.delay;
    ev.sequence = state.next_sequence++;
    ev.action = chosen;
    ev.product_additions = action.produced;
    for (const auto& [species, kappa] : ev.product_additions)
        state.pending_products[species] += kappa;
    state.pending.push(std::move(ev));
    return {StepKind::Started, chosen, state.time};
}

namespace {

class GridRecorder {
public:
    GridRecorder(Trajectory& out, double t_end, double dt) : out_(out), dt_(dt) {
        count_ = static_cast<std::size_t>(std::floor(t_end / dt + 1e-9)) + 1;
    }

    void on_state(double event_time, const std::vector<std::int64_t>& counts_before) {
        while (next_ < count_ && static_cast<double>(next_) * dt_ < event_time) {
            emit(static_cast<double>(next_) * dt_, counts_before);
            ++next_;
        }
    }

    void finish(const std::vector<std::int64_t>& final_counts) {
        while (next_ < count_) {
            emit(static_cast<double>(next_) * dt_, final_counts);
            ++next_;
        }
    }

private:
    void emit(double t, const std::vector<std::int64_t>& counts) {
        out_.samples.push_back({t, "grid", counts});
    }

    Trajectory& out_;
    double dt_;
    std::size_t count_ = 0;
    std::size_t next_ = 0;
};

}  // namespace

Trajectory simulate(const DssaModel& model, double t_end, std::uint64_t seed,
                    const Recording& recording) {
    if (!(t_end >= 0.0)) throw std::invalid_argument("simulation horizon must be nonnegative");

    Trajectory out;
    out.species = model.species();
    SimState state = initial_state(model);
    RngStream rng(seed);

    const bool all_events = recording.mode == Recording::Mode::AllEvents;
    GridRecorder grid(out, t_end, recording.grid_dt > 0 ? recording.grid_dt : 1.0);

    if (all_events)
        out.samples.push_back({state.time, "initial", state.counts});

    while (true) {
        const std::vector<std::int64_t> before = state.counts;
        StepEvent ev;
        try {
            ev = step(state, model, rng, t_end);
        } catch (const std::exception& e) {
            throw std::runtime_error("simulation failed at t=" + format_double(state.time) + ": " +
                                     e.what());
        }
        if (ev.kind == StepKind::Quiescent || ev.kind == StepKind::ReachedEnd) break;

        const ActionId& name = model.actions()[ev.action].name;
        if (!all_events) {
            grid.on_state(ev.time, before);
            continue;
        }
        switch (ev.kind) {
            case StepKind::Started:
                out.samples.push_back({ev.time, "start(" + name + ")", state.counts});
                break;
            case StepKind::Completed:
                out.samples.push_back({ev.time, "complete(" + name + ")", state.counts});
                break;
            case StepKind::FiredImmediate: {
                // Zero delay: start and completion coincide; show the
                // intermediate counts with reactants gone, then the result.
                std::vector<std::int64_t> mid = state.counts;
                for (const auto& [species, kappa] : model.actions()[ev.action].produced)
                    mid[species] -= kappa;
                out.samples.push_back({ev.time, "start(" + name + ")", std::move(mid)});
                out.samples.push_back({ev.time, "complete(" + name + ")", state.counts});
                break;
            }
            default:
                break;
        }
    }
    if (!all_events) grid.finish(state.counts);
    return out;
}

namespace {

// Neumaier-compensated accumulator; summation order is fixed by run index,
// so ensemble statistics are independent of the job count.
struct CompensatedSum {
    double sum = 0.0;
    double compensation = 0.0;

    void add(double v) {
        const double t = sum + v;
        if (std::abs(sum) >= std::abs(v))
            compensation += (sum - t) + v;
        else
            compensation += (v - t) + sum;
        sum = t;
    }
    double value() const { return sum + compensation; }
};

}  // namespace

EnsembleStats ensemble(const DssaModel& model, double t_end, std::size_t runs,
                       std::uint64_t base_seed, double grid_dt, unsigned jobs) {
    if (runs < 1) throw std::invalid_argument("ensemble needs at least one run");
    if (!(grid_dt > 0.0)) throw std::invalid_argument("grid step must be positive");

    const std::size_t grid_points = static_cast<std::size_t>(std::floor(t_end / grid_dt + 1e-9)) + 1;
    const std::size_t n_species = model.species().size();

    std::vector<std::vector<std::int64_t>> per_run(runs);
    std::exception_ptr failure;
    std::mutex failure_mutex;

    const unsigned worker_count = std::max(1u, std::min<unsigned>(jobs, runs));
    std::vector<std::thread> workers;
    std::atomic<std::size_t> next_run{0};
    for (unsigned w = 0; w < worker_count; ++w) {
        workers.emplace_back([&]() {
            while (true) {
                const std::size_t run = next_run.fetch_add(1);
                if (run >= runs) return;
                try {
                    RngStream rng = RngStream::for_run(base_seed, run);
                    Recording rec{Recording::Mode::Grid, grid_dt};
                    Trajectory t = simulate(model, t_end, rng.seed(), rec);
                    std::vector<std::int64_t> flat;
                    flat.reserve(grid_points * n_species);
                    for (const auto& s : t.samples)
                        flat.insert(flat.end(), s.counts.begin(), s.counts.end());
                    per_run[run] = std::move(flat);
                } catch (...) {
                    std::lock_guard<std::mutex> lock(failure_mutex);
                    if (!failure) failure = std::current_exception();
                    return;
                }
            }
        });
    }
    for (auto& t : workers) t.join();
    if (failure) std::rethrow_exception(failure);

    EnsembleStats stats;
    stats.species = model.species();
    stats.runs = runs;
    stats.times.resize(grid_points);
    for (std::size_t i = 0; i < grid_points; ++i) stats.times[i] = static_cast<double>(i) * grid_dt;
    stats.mean.assign(grid_points * n_species, 0.0);
    stats.variance.assign(grid_points * n_species, 0.0);

    for (std::size_t cell = 0; cell < grid_points * n_species; ++cell) {
        CompensatedSum sum, sum_sq;
        for (std::size_t run = 0; run < runs; ++run) {
            const double v = static_cast<double>(per_run[run][cell]);
            sum.add(v);
            sum_sq.add(v * v);
        }
        const double n = static_cast<double>(runs);
        const double mean = sum.value() / n;
        stats.mean[cell] = mean;
        if (runs > 1)
            stats.variance[cell] = std::max(0.0, (sum_sq.value() - n * mean * mean) / (n - 1.0));
    }
    return stats;
}

std::string trajectory_csv(const Trajectory& t) {
    std::ostringstream os;
    os << "time,event";
    for (const auto& s : t.species) os << "," << s;
    os << "\n";
    for (const auto& sample : t.samples) {
        os << format_double(sample.time) << "," << sample.event;
        for (std::int64_t c : sample.counts) os << "," << c;
        os << "\n";
    }
    return os.str();
}

std::string ensemble_csv(const EnsembleStats& stats) {
    std::ostringstream os;
    os << "time";
    for (const auto& s : stats.species) os << "," << s << "_mean," << s << "_var";
    os << "\n";
    const std::size_t n_species = stats.species.size();
    for (std::size_t i = 0; i < stats.times.size(); ++i) {
        os << format_double(stats.times[i]);
        for (std::size_t s = 0; s < n_species; ++s) {
            os << "," << format_double(stats.mean[i * n_species + s]) << ","
               << format_double(stats.variance[i * n_species + s]);
        }
        os << "\n";
    }
    return os.str();
}

}  // namespace biopepad
