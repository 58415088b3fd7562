#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <queue>
#include <string>
#include <vector>

#include "biopepad/model.hpp"
#include "biopepad/rng.hpp"
#include "biopepad/semantics.hpp"

namespace biopepad {

/// Reaction view of a validated spec, compiled once per simulation batch:
/// species and action order, per-action participants and the net
/// stoichiometry split into the consumed and produced parts.
class DssaModel {
public:
    static DssaModel compile(const SystemSpec& spec, CapacityMode capacity = CapacityMode::Strict);

    struct Participant {
        std::size_t species = 0;
        RoleOp role = RoleOp::Reactant;
        std::int64_t stoich = 1;
    };
    struct Action {
        ActionId name;
        double delay = 0.0;
        std::vector<Participant> participants;
        std::vector<std::pair<std::size_t, std::int64_t>> consumed;  // (species, kappa)
        std::vector<std::pair<std::size_t, std::int64_t>> produced;  // (species, kappa)
    };

    const SystemSpec& spec() const { return *spec_; }
    const std::vector<SpeciesId>& species() const { return species_; }
    const std::vector<Action>& actions() const { return actions_; }
    std::int64_t max_level(std::size_t species_idx) const { return max_levels_[species_idx]; }
    std::vector<std::int64_t> initial_counts() const { return init_counts_; }
    CapacityMode capacity() const { return capacity_; }

private:
    const SystemSpec* spec_ = nullptr;
    std::vector<SpeciesId> species_;
    std::vector<Action> actions_;
    std::vector<std::int64_t> max_levels_;
    std::vector<std::int64_t> init_counts_;
    CapacityMode capacity_ = CapacityMode::Strict;
};

/// A started action instance waiting out its delay; products land at
/// `completion_time`. Equal times resolve in start (insertion) order.
struct PendingEvent {
    double completion_time = 0.0;
    std::uint64_t sequence = 0;
    std::size_t action = 0;
    std::vector<std::pair<std::size_t, std::int64_t>> product_additions;
};

struct PendingLater {
    bool operator()(const PendingEvent& a, const PendingEvent& b) const {
        if (a.completion_time != b.completion_time) return a.completion_time > b.completion_time;
        return a.sequence > b.sequence;
    }
};

struct SimState {
    double time = 0.0;
    std::vector<std::int64_t> counts;
    std::vector<std::int64_t> pending_products;  // per species, products in flight
    std::priority_queue<PendingEvent, std::vector<PendingEvent>, PendingLater> pending;
    std::uint64_t next_sequence = 0;

    std::size_t pending_count() const { return pending.size(); }
};

/// Counts at the initial process leaves, empty pending queue, t = 0.
SimState initial_state(const DssaModel& model);

/// Per-action propensities in model action order; zero whenever the start
/// constraints fail in the current state.
std::vector<double> propensities(const SimState& state, const DssaModel& model);

enum class StepKind {
    Quiescent,       // nothing can fire and nothing is pending
    Started,         // delayed action began; reactants consumed
    Completed,       // pending instance finished; products added
    FiredImmediate,  // zero-delay action; full column applied at once
    ReachedEnd,      // next event lies beyond the horizon
};

struct StepEvent {
    StepKind kind = StepKind::Quiescent;
    std::size_t action = 0;
    double time = 0.0;
};

/// Advances the state by one event, or to `t_end` when the next event would
/// overshoot it. Pass an infinite horizon to step unconditionally.
StepEvent step(SimState& state, const DssaModel& model, RngStream& rng,
               double t_end = std::numeric_limits<double>::infinity());

struct TrajectorySample {
    double time = 0.0;
    std::string event;  // "initial", "start(a)", "complete(a)"
    std::vector<std::int64_t> counts;
};

struct Trajectory {
    std::vector<SpeciesId> species;
    std::vector<TrajectorySample> samples;
};

struct Recording {
    enum class Mode { AllEvents, Grid };
    Mode mode = Mode::AllEvents;
    double grid_dt = 1.0;
};

/// Runs until the horizon or quiescence with an empty pending queue.
/// Deterministic for a fixed seed.
Trajectory simulate(const DssaModel& model, double t_end, std::uint64_t seed,
                    const Recording& recording = {});

struct EnsembleStats {
    std::vector<SpeciesId> species;
    std::vector<double> times;
    std::vector<double> mean;      // times x species, row-major
    std::vector<double> variance;  // sample variance across runs
    std::size_t runs = 0;
};

/// Independent runs with per-run seeds split from `base_seed`, sampled on a
/// fixed grid (last value before each grid point). Aggregation order is
/// fixed by run index, so results do not depend on the job count.
EnsembleStats ensemble(const DssaModel& model, double t_end, std::size_t runs,
                       std::uint64_t base_seed, double grid_dt, unsigned jobs = 1);

std::string trajectory_csv(const Trajectory& t);
std::string ensemble_csv(const EnsembleStats& stats);

}  // namespace biopepad
