#pragma once

#include <cmath>
#include <compare>
#include <cstdint>
#include <limits>
#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "biopepad/model.hpp"
#include "biopepad/parser.hpp"
#include "biopepad/rng.hpp"

namespace testutil {

// The one-reaction conversion model in its minimal textual form: no rate or
// species statements, the parser fills the gaps.
inline const char* kToyMinimalText =
    "A = (alpha,1) << A; B = (alpha,1) >> B; system A[3] <alpha> B[0]; delay alpha = 2.0;";

// The same model fully specified, as shipped in models/toy.biopepad.
inline const char* kToyText = R"(
param k = 0.5;
step = 1.0;
species A : max = 10, init = 3;
species B : max = 10, init = 0;
rate alpha = MA(k);
delay alpha = 2.0;
A = (alpha, 1) << A;
B = (alpha, 1) >> B;
system A[3] <alpha> B[0];
)";

inline const char* kCellCycleText = R"(
param a1 = 0.2;
param a4 = 0.15;
param d2 = 0.05;
param d3 = 0.09;
step = 1.0;
species T_I : max = 4000, init = 120;
species T_M : max = 4000, init = 100;
rate alpha = MA(a1);
rate beta = MA(a4);
rate gamma = MA(d2);
rate delta = MA(d3);
delay alpha = 0.1;
delay beta = 0.0;
delay gamma = 0.0;
delay delta = 0.0;
T_I = (alpha, 1) << T_I + (beta, 2) >> T_I + (gamma, 1) << T_I;
T_M = (alpha, 1) >> T_M + (beta, 1) << T_M + (delta, 1) << T_M;
system T_I[120] <alpha, beta> T_M[100];
)";

inline biopepad::SystemSpec parse_or_die(const std::string& text) {
    auto result = biopepad::parse_model(text);
    if (!result.ok()) {
        std::string msg = "test model failed to parse:";
        for (const auto& d : result.diagnostics)
            msg += "\n  " + biopepad::format_diagnostic(d, "<test>");
        throw std::runtime_error(msg);
    }
    return std::move(*result.spec);
}

// ---------------------------------------------------------------------------
// Independent closure of the toy model's reachable states over the
// abstraction (A level, B level, pending count). A start consumes one A and
// schedules one instance; a completion pops the oldest instance and yields
// one B. Written against the reaction structure directly, not through the
// semantics code under test.
struct ToyAbstractState {
    int a = 3;
    int b = 0;
    int pending = 0;
    auto operator<=>(const ToyAbstractState&) const = default;
};

struct ToyAbstractGraph {
    std::set<ToyAbstractState> states;
    std::set<std::pair<ToyAbstractState, ToyAbstractState>> start_edges;
    std::set<std::pair<ToyAbstractState, ToyAbstractState>> complete_edges;
};

inline ToyAbstractGraph toy_abstract_closure() {
    ToyAbstractGraph g;
    std::vector<ToyAbstractState> frontier{{3, 0, 0}};
    g.states.insert(frontier.front());
    while (!frontier.empty()) {
        ToyAbstractState s = frontier.back();
        frontier.pop_back();
        if (s.a >= 1) {
            ToyAbstractState next{s.a - 1, s.b, s.pending + 1};
            g.start_edges.insert({s, next});
            if (g.states.insert(next).second) frontier.push_back(next);
        }
        if (s.pending >= 1) {
            ToyAbstractState next{s.a, s.b + 1, s.pending - 1};
            g.complete_edges.insert({s, next});
            if (g.states.insert(next).second) frontier.push_back(next);
        }
    }
    return g;
}

// ---------------------------------------------------------------------------
// Reference classic stochastic simulation over a plain reaction list,
// consuming two uniform draws per step exactly like the textbook algorithm.
struct RefReaction {
    double rate_constant;
    std::vector<std::pair<std::size_t, std::int64_t>> consumed;
    std::vector<std::pair<std::size_t, std::int64_t>> produced;
};

struct RefSsa {
    std::vector<RefReaction> reactions;
    std::vector<std::int64_t> counts;
    double time = 0.0;

    // Returns the fired reaction index and the waiting time, or (npos, inf)
    // when nothing can fire.
    std::pair<std::size_t, double> step(biopepad::RngStream& rng) {
        std::vector<double> a(reactions.size(), 0.0);
        double a0 = 0.0;
        for (std::size_t i = 0; i < reactions.size(); ++i) {
            double v = reactions[i].rate_constant;
            for (const auto& [s, kappa] : reactions[i].consumed) {
                if (counts[s] < kappa) {
                    v = 0.0;
                    break;
                }
                for (std::int64_t j = 0; j < kappa; ++j) v *= static_cast<double>(counts[s]);
            }
            a[i] = v;
            a0 += v;
        }
        if (a0 == 0.0) return {static_cast<std::size_t>(-1), std::numeric_limits<double>::infinity()};
        const double tau = rng.exponential(a0);
        const double target = rng.next_unit() * a0;
        double cumulative = 0.0;
        std::size_t chosen = reactions.size();
        for (std::size_t i = 0; i < a.size(); ++i) {
            if (a[i] <= 0.0) continue;
            cumulative += a[i];
            chosen = i;
            if (target <= cumulative) break;
        }
        time += tau;
        for (const auto& [s, kappa] : reactions[chosen].consumed) counts[s] -= kappa;
        for (const auto& [s, kappa] : reactions[chosen].produced) counts[s] += kappa;
        return {chosen, tau};
    }
};

// ---------------------------------------------------------------------------
// Method-of-steps oracle for x'(t) = -x(t - 1) with x = 1 on [-1, 0]: the
// solution is a polynomial on each unit interval, integrated exactly from
// the previous one.
class DelayedDecayOracle {
public:
    explicit DelayedDecayOracle(int intervals) {
        // coefficients of x on [k, k+1], starting with the history segment
        // on [-1, 0] represented as interval index -1.
        polys_.push_back({1.0});  // [-1, 0]
        for (int k = 0; k < intervals; ++k) {
            const auto& prev = polys_.back();
            // q(t) = x(k) + integral_k^t -prev(s - 1) ds. Represent
            // everything in the global variable t.
            std::vector<double> shifted = shift(prev, -1.0);   // prev(t - 1)
            std::vector<double> integrand(shifted.size(), 0.0);
            for (std::size_t i = 0; i < shifted.size(); ++i) integrand[i] = -shifted[i];
            std::vector<double> anti(integrand.size() + 1, 0.0);
            for (std::size_t i = 0; i < integrand.size(); ++i)
                anti[i + 1] = integrand[i] / static_cast<double>(i + 1);
            const double at_k = eval(polys_.back(), static_cast<double>(k));
            const double anti_at_k = eval(anti, static_cast<double>(k));
            std::vector<double> next = anti;
            next[0] += at_k - anti_at_k;
            polys_.push_back(std::move(next));
        }
    }

    double operator()(double t) const {
        int k = static_cast<int>(std::floor(t + 1.0));  // history is index 0
        if (t <= -1.0) k = 0;
        if (k < 0) k = 0;
        if (k >= static_cast<int>(polys_.size())) k = static_cast<int>(polys_.size()) - 1;
        return eval(polys_[static_cast<std::size_t>(k)], t);
    }

private:
    static double eval(const std::vector<double>& p, double t) {
        double r = 0.0;
        for (std::size_t i = p.size(); i-- > 0;) r = r * t + p[i];
        return r;
    }

    // p(t + d) expanded in t.
    static std::vector<double> shift(const std::vector<double>& p, double d) {
        std::vector<double> out(p.size(), 0.0);
        for (std::size_t i = 0; i < p.size(); ++i) {
            // p_i * (t + d)^i
            std::vector<double> binom{1.0};
            for (std::size_t j = 0; j < i; ++j) {
                std::vector<double> next(binom.size() + 1, 0.0);
                for (std::size_t m = 0; m < binom.size(); ++m) {
                    next[m + 1] += binom[m];
                    next[m] += binom[m] * d;
                }
                binom = std::move(next);
            }
            for (std::size_t m = 0; m < binom.size(); ++m) out[m] += p[i] * binom[m];
        }
        return out;
    }

    std::vector<std::vector<double>> polys_;
};

}  // namespace testutil
