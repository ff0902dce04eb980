#include "bearingreg/ga.hpp"

#include "bearingreg/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

namespace bearingreg {

namespace {

double clamp_gene(double v, double lo, double hi) {
    return std::min(std::max(v, lo), hi);
}

int tournament_pick(const std::vector<double>& fitness, std::mt19937_64& rng) {
    std::uniform_int_distribution<int> pick(0, static_cast<int>(fitness.size()) - 1);
    int best = pick(rng);
    for (int t = 1; t < 3; ++t) {
        const int c = pick(rng);
        if (fitness[c] < fitness[best]) {
            best = c;
        }
    }
    return best;
}

} // namespace

Eigen::VectorXd nelder_mead_box(const Objective& objective, Eigen::VectorXd start,
                                double lower, double upper, int max_iterations) {
    const int n = static_cast<int>(start.size());
    const double span = upper - lower;
    auto clip = [&](Eigen::VectorXd v) {
        for (int i = 0; i < n; ++i) {
            v[i] = clamp_gene(v[i], lower, upper);
        }
        return v;
    };

    std::vector<Eigen::VectorXd> simplex;
    simplex.reserve(n + 1);
    simplex.push_back(clip(start));
    for (int i = 0; i < n; ++i) {
        Eigen::VectorXd v = start;
        v[i] += (v[i] + 0.02 * span <= upper) ? 0.02 * span : -0.02 * span;
        simplex.push_back(clip(v));
    }
    std::vector<double> value(n + 1);
    for (int i = 0; i <= n; ++i) {
        value[i] = objective(simplex[i]);
    }

    for (int iter = 0; iter < max_iterations; ++iter) {
        std::vector<int> order(n + 1);
        std::iota(order.begin(), order.end(), 0);
        std::sort(order.begin(), order.end(), [&](int a, int b) { return value[a] < value[b]; });
        const int best = order[0], worst = order[n], second_worst = order[n - 1];
        if (std::abs(value[worst] - value[best]) <
            1e-14 * (1.0 + std::abs(value[best]))) {
            break;
        }

        Eigen::VectorXd centroid = Eigen::VectorXd::Zero(n);
        for (int i = 0; i <= n; ++i) {
            if (i != worst) {
                centroid += simplex[i];
            }
        }
        centroid /= n;

        const Eigen::VectorXd reflected = clip(centroid + (centroid - simplex[worst]));
        const double f_reflected = objective(reflected);
        if (f_reflected < value[best]) {
            const Eigen::VectorXd expanded = clip(centroid + 2.0 * (centroid - simplex[worst]));
            const double f_expanded = objective(expanded);
            if (f_expanded < f_reflected) {
                simplex[worst] = expanded;
                value[worst] = f_expanded;
            } else {
                simplex[worst] = reflected;
                value[worst] = f_reflected;
            }
        } else if (f_reflected < value[second_worst]) {
            simplex[worst] = reflected;
            value[worst] = f_reflected;
        } else {
            const Eigen::VectorXd contracted = clip(centroid + 0.5 * (simplex[worst] - centroid));
            const double f_contracted = objective(contracted);
            if (f_contracted < value[worst]) {
                simplex[worst] = contracted;
                value[worst] = f_contracted;
            } else {
                for (int i = 0; i <= n; ++i) {
                    if (i == best) {
                        continue;
                    }
                    simplex[i] = clip(simplex[best] + 0.5 * (simplex[i] - simplex[best]));
                    value[i] = objective(simplex[i]);
                }
            }
        }
    }

    int best = 0;
    for (int i = 1; i <= n; ++i) {
        if (value[i] < value[best]) {
            best = i;
        }
    }
    return simplex[best];
}

GaResult minimize_ga(const Objective& objective, int dim, const GaOptions& options,
                     const std::optional<Eigen::MatrixXd>& initial_population) {
    if (dim < 1) {
        throw InvalidArgumentError("minimize_ga: dimension must be positive");
    }
    if (!(options.lower_bound < options.upper_bound)) {
        throw InvalidArgumentError("minimize_ga: lower bound must be below upper bound");
    }
    if (options.generations < 1 || options.population_size < 4) {
        throw InvalidArgumentError("minimize_ga: need generations >= 1 and population >= 4");
    }

    const int pop_n = options.population_size;
    const double lo = options.lower_bound;
    const double hi = options.upper_bound;
    std::mt19937_64 rng(options.seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);

    Eigen::MatrixXd pop(pop_n, dim);
    if (initial_population && initial_population->cols() == dim) {
        const int given = std::min<int>(static_cast<int>(initial_population->rows()), pop_n);
        for (int i = 0; i < given; ++i) {
            for (int g = 0; g < dim; ++g) {
                pop(i, g) = clamp_gene((*initial_population)(i, g), lo, hi);
            }
        }
        for (int i = given; i < pop_n; ++i) {
            for (int g = 0; g < dim; ++g) {
                pop(i, g) = lo + (hi - lo) * unit(rng);
            }
        }
    } else {
        for (int i = 0; i < pop_n; ++i) {
            for (int g = 0; g < dim; ++g) {
                pop(i, g) = lo + (hi - lo) * unit(rng);
            }
        }
    }

    std::vector<double> fitness(pop_n);
    for (int i = 0; i < pop_n; ++i) {
        fitness[i] = objective(pop.row(i).transpose());
    }

    GaResult result;
    result.fitness_history.reserve(options.generations);

    const int n_elite = 2;
    const double p_crossover = 0.9;
    const double blend_alpha = 0.5;
    const double p_mutate = 1.0 / dim;
    std::normal_distribution<double> gauss(0.0, 1.0);

    for (int gen = 0; gen < options.generations; ++gen) {
        const double sigma_mut =
            0.1 * (hi - lo) * (1.0 - static_cast<double>(gen) / options.generations);

        std::vector<int> order(pop_n);
        std::iota(order.begin(), order.end(), 0);
        std::sort(order.begin(), order.end(), [&](int a, int b) { return fitness[a] < fitness[b]; });

        Eigen::MatrixXd next(pop_n, dim);
        for (int e = 0; e < n_elite; ++e) {
            next.row(e) = pop.row(order[e]);
        }
        for (int i = n_elite; i < pop_n; ++i) {
            const Eigen::VectorXd pa = pop.row(tournament_pick(fitness, rng)).transpose();
            const Eigen::VectorXd pb = pop.row(tournament_pick(fitness, rng)).transpose();
            Eigen::VectorXd child(dim);
            if (unit(rng) < p_crossover) {
                for (int g = 0; g < dim; ++g) {
                    const double l = std::min(pa[g], pb[g]);
                    const double u = std::max(pa[g], pb[g]);
                    const double d = u - l;
                    child[g] = (l - blend_alpha * d) + (d + 2.0 * blend_alpha * d) * unit(rng);
                }
            } else {
                child = pa;
            }
            for (int g = 0; g < dim; ++g) {
                if (unit(rng) < p_mutate) {
                    child[g] += sigma_mut * gauss(rng);
                }
                child[g] = clamp_gene(child[g], lo, hi);
            }
            next.row(i) = child.transpose();
        }

        pop = next;
        for (int i = 0; i < pop_n; ++i) {
            fitness[i] = objective(pop.row(i).transpose());
        }
        const double best_now = *std::min_element(fitness.begin(), fitness.end());
        result.fitness_history.push_back(best_now);
        result.generations_run = gen + 1;

        if (gen + 1 >= options.stall_generations) {
            const double past =
                result.fitness_history[gen + 1 - options.stall_generations];
            if (past - best_now < options.tolerance) {
                break;
            }
        }
    }

    int best_idx = 0;
    for (int i = 1; i < pop_n; ++i) {
        if (fitness[i] < fitness[best_idx]) {
            best_idx = i;
        }
    }
    Eigen::VectorXd best = pop.row(best_idx).transpose();
    double best_fitness = fitness[best_idx];

    if (options.polish) {
        const Eigen::VectorXd refined = nelder_mead_box(objective, best, lo, hi, 60 * dim);
        const double refined_fitness = objective(refined);
        if (refined_fitness < best_fitness) {
            best = refined;
            best_fitness = refined_fitness;
            pop.row(best_idx) = refined.transpose();
        }
    }

    result.best = best;
    result.best_fitness = best_fitness;
    result.final_population = pop;
    return result;
}

} // namespace bearingreg
