#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

namespace bearingreg {

/// Bounded real-coded genetic optimizer settings. Operator choices: tournament
/// selection (size 3), blend crossover (alpha = 0.5, probability 0.9),
/// per-gene Gaussian mutation (probability 1/dim) whose sigma shrinks linearly
/// from 0.1 * (upper - lower) to zero over the generations, elitism of 2.
struct GaOptions {
    double lower_bound = -0.05;
    double upper_bound = 0.05;
    int generations = 100;
    double tolerance = 1e-15;
    int population_size = 60;
    int stall_generations = 25;
    std::uint64_t seed = 0;
    /// Deterministic bounded Nelder-Mead refinement of the best individual.
    bool polish = true;
};

struct GaResult {
    Eigen::VectorXd best;
    double best_fitness = 0.0;
    std::vector<double> fitness_history; // best fitness per generation
    Eigen::MatrixXd final_population;    // rows are individuals
    int generations_run = 0;
};

using Objective = std::function<double(const Eigen::VectorXd&)>;

/// Minimize `objective` over the box [lower, upper]^dim. Deterministic for a
/// fixed seed. `initial_population` (rows = individuals) seeds the search when
/// provided; otherwise the population is drawn uniformly from the box.
GaResult minimize_ga(const Objective& objective, int dim, const GaOptions& options,
                     const std::optional<Eigen::MatrixXd>& initial_population = std::nullopt);

/// Bounded Nelder-Mead local refinement used as the GA polish step; exposed
/// for testing.
Eigen::VectorXd nelder_mead_box(const Objective& objective, Eigen::VectorXd start,
                                double lower, double upper, int max_iterations);

} // namespace bearingreg
