#pragma once

#include "dfsos/core.hpp"
#include "dfsos/dfsos.hpp"

namespace dfsos {

enum class BetaSolver { APG, ADMM };

/// Columns of Q are D-orthonormal: the all-ones vector followed by the scoring
/// vectors accepted so far.
struct DeflationState {
    MatrixXd Q;
    VectorXd d;

    explicit DeflationState(const VectorXd& class_weights);
    void accept(const VectorXd& theta);
};

/// Closed-form scoring update for fixed β:
///   w = (I − QQᵀD)D⁻¹YᵀXβ,  θ = w / √(wᵀDw).
/// Throws DegenerateDirection when wᵀDw ≤ 1e-14.
VectorXd theta_update_deflation(const DeflationState& state, const MatrixXd& X, const IndicatorMatrix& ind,
                                const VectorXd& beta);

/// Sequential sparse optimal scoring: one (θⱼ, βⱼ) pair at a time by block coordinate
/// descent. Columns whose β collapses to zero are skipped with a warning. X is
/// centred internally.
FitResult fit_deflation(const Dataset& data, const SolverConfig& cfg, int q, BetaSolver beta_solver);

}  // namespace dfsos
