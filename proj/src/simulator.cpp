#include "bearingreg/simulator.hpp"

#include "bearingreg/errors.hpp"
#include "bearingreg/geometry.hpp"

#include <Eigen/Cholesky>
#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <map>
#include <numbers>
#include <set>
#include <thread>

namespace bearingreg {

void ClutterModel::validate() const {
    if (lambda < 0.0) {
        throw ConfigError("clutter: lambda must be >= 0");
    }
    if (!(volume > 0.0)) {
        throw ConfigError("clutter: volume must be positive");
    }
    if (!(p_d > 0.0) || p_d > 1.0) {
        throw ConfigError("clutter: detection probability must be in (0, 1]");
    }
}

void ScenarioConfig::validate() const {
    if (steps < 1) {
        throw ConfigError("scenario: steps must be >= 1");
    }
    if (!(sample_time > 0.0)) {
        throw ConfigError("scenario: sample time must be positive");
    }
    if (truth_q < 0.0 || tracker_q < 0.0) {
        throw ConfigError("scenario: process noise intensities must be >= 0");
    }
    if (sensors.empty()) {
        throw ConfigError("scenario: at least one sensor required");
    }
    std::vector<int> ids;
    for (const auto& s : sensors) {
        if (!(s.sigma_theta > 0.0)) {
            throw ConfigError("scenario: sensor sigma_theta must be positive");
        }
        ids.push_back(s.id);
    }
    std::sort(ids.begin(), ids.end());
    if (std::adjacent_find(ids.begin(), ids.end()) != ids.end()) {
        throw ConfigError("scenario: sensor ids must be unique");
    }
    if (targets.empty()) {
        throw ConfigError("scenario: at least one target required");
    }
    clutter.validate();
    ga.validate();
    if (crlb_scale < 0.0) {
        throw ConfigError("scenario: crlb_scale must be >= 0");
    }
}

TruthData generate_truth(const ScenarioConfig& cfg, std::mt19937_64& rng) {
    MotionModel truth_model{cfg.sample_time, cfg.truth_q, cfg.truth_q};
    const auto [f, q] = transition_matrices(truth_model);

    Eigen::Matrix4d chol = Eigen::Matrix4d::Zero();
    if (cfg.truth_q > 0.0) {
        chol = Eigen::LLT<Eigen::Matrix4d>(q).matrixL();
    }
    std::normal_distribution<double> gauss(0.0, 1.0);

    TruthData truth(cfg.targets.size());
    for (std::size_t t = 0; t < cfg.targets.size(); ++t) {
        truth[t].resize(cfg.steps);
        Eigen::Vector4d state = cfg.targets[t];
        truth[t][0] = state;
        for (int k = 1; k < cfg.steps; ++k) {
            Eigen::Vector4d noise = Eigen::Vector4d::Zero();
            if (cfg.truth_q > 0.0) {
                Eigen::Vector4d w;
                for (int i = 0; i < 4; ++i) {
                    w[i] = gauss(rng);
                }
                noise = chol * w;
            }
            state = f * state + noise;
            truth[t][k] = state;
        }
    }
    return truth;
}

std::vector<BearingReport> generate_bearings(const TruthData& truth,
                                             const std::vector<SensorConfig>& sensors,
                                             std::mt19937_64& rng) {
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::vector<BearingReport> reports;
    if (truth.empty()) {
        return reports;
    }
    const int steps = static_cast<int>(truth.front().size());
    reports.reserve(truth.size() * sensors.size() * steps);
    for (int k = 0; k < steps; ++k) {
        for (std::size_t t = 0; t < truth.size(); ++t) {
            const Position2D pos(truth[t][k][0], truth[t][k][2]);
            for (const auto& sensor : sensors) {
                const double theta = bearing_from(sensor.position, pos);
                const double noise = sensor.sigma_theta * gauss(rng);
                BearingReport r;
                r.sensor_id = sensor.id;
                r.time = k;
                r.angle = wrap_angle(theta + sensor.true_bias + noise);
                r.target = static_cast<int>(t);
                reports.push_back(r);
            }
        }
    }
    return reports;
}

std::vector<BearingReport> apply_detection_and_clutter(
    const std::vector<BearingReport>& reports, const ClutterModel& clutter,
    const std::vector<SensorConfig>& sensors, int steps, std::mt19937_64& rng) {
    clutter.validate();
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::poisson_distribution<int> n_clutter(clutter.lambda * clutter.volume);
    constexpr double pi = std::numbers::pi;

    std::vector<BearingReport> out;
    for (const auto& r : reports) {
        if (unit(rng) <= clutter.p_d) {
            BearingReport kept = r;
            kept.target.reset();
            out.push_back(kept);
        }
    }
    for (int k = 0; k < steps; ++k) {
        for (const auto& sensor : sensors) {
            const int m = n_clutter(rng);
            for (int c = 0; c < m; ++c) {
                // uniform over an arc of width `volume` ending at pi; the
                // default V = 2 pi covers the whole bearing domain (-pi, pi]
                BearingReport fa;
                fa.sensor_id = sensor.id;
                fa.time = k;
                fa.angle = wrap_angle(pi - clutter.volume * unit(rng));
                fa.target.reset();
                out.push_back(fa);
            }
        }
    }
    std::stable_sort(out.begin(), out.end(), [](const BearingReport& a, const BearingReport& b) {
        if (a.time != b.time) return a.time < b.time;
        return a.sensor_id < b.sensor_id;
    });
    return out;
}

namespace {

struct PairCandidate {
    int det_i = 0; // detection indices within the scan
    int det_j = 0;
    double angle_i = 0.0;
    double angle_j = 0.0;
    Position2D position = Position2D::Zero();
    Covariance2x2 cov = Covariance2x2::Identity();
    double bias_reach = 0.0; // m, largest position shift a boxed bias can cause
};

struct QuadCandidate {
    Position2D position = Position2D::Zero();
    double mahalanobis2 = 0.0;
    int dets[4] = {0, 0, 0, 0}; // per-sensor detection index
    std::vector<std::pair<int, double>> bearings; // sensor id -> angle
};

struct CandidateTrack {
    int label = 0;
    Position2D position = Position2D::Zero();
    int hits = 0;
    int misses = 0;
    bool confirmed = false;
    std::vector<std::pair<int, std::vector<std::pair<int, double>>>> buffer; // (time, bearings)
};

std::vector<PairCandidate> pair_candidates(const std::vector<double>& dets_i,
                                           const std::vector<double>& dets_j,
                                           const SensorConfig& si, const SensorConfig& sj,
                                           double bias_allowance) {
    std::vector<PairCandidate> out;
    for (std::size_t a = 0; a < dets_i.size(); ++a) {
        for (std::size_t b = 0; b < dets_j.size(); ++b) {
            try {
                const Position2D p = triangulate(si, sj, dets_i[a], dets_j[b]);
                const Eigen::Matrix2d jac = pair_jacobian(si, sj, p);
                Covariance2x2 r_polar = Covariance2x2::Zero();
                r_polar(0, 0) = si.sigma_theta * si.sigma_theta;
                r_polar(1, 1) = sj.sigma_theta * sj.sigma_theta;
                const Covariance2x2 cov = transform_covariance(jac, r_polar);
                const double reach = bias_allowance * jac.inverse().norm();
                out.push_back({static_cast<int>(a), static_cast<int>(b),
                               dets_i[a], dets_j[b], p, cov, reach});
            } catch (const DegenerateGeometryError&) {
            }
        }
    }
    return out;
}

} // namespace

std::vector<BearingReport> prune_and_associate(const std::vector<BearingReport>& detections,
                                               const PairingPlan& plan,
                                               const std::vector<SensorConfig>& sensors,
                                               const AssociationSettings& settings) {
    if (plan.pairs.size() < 2) {
        throw InsufficientSensorsError("prune_and_associate: plan needs two pairs");
    }
    const auto& [ida_i, ida_j] = plan.pairs[0];
    const auto& [idb_i, idb_j] = plan.pairs[1];
    const SensorConfig& sa_i = sensors[sensor_index(sensors, ida_i)];
    const SensorConfig& sa_j = sensors[sensor_index(sensors, ida_j)];
    const SensorConfig& sb_i = sensors[sensor_index(sensors, idb_i)];
    const SensorConfig& sb_j = sensors[sensor_index(sensors, idb_j)];

    std::map<int, std::map<int, std::vector<double>>> scans; // time -> sensor -> angles
    for (const auto& d : detections) {
        scans[d.time][d.sensor_id].push_back(d.angle);
    }

    std::vector<CandidateTrack> tracks;
    std::vector<BearingReport> out;
    int next_label = 0;

    auto release = [&out](int time, const std::vector<std::pair<int, double>>& bearings,
                          int label) {
        for (const auto& [sensor_id, angle] : bearings) {
            BearingReport r;
            r.sensor_id = sensor_id;
            r.time = time;
            r.angle = angle;
            r.target = label;
            out.push_back(r);
        }
    };

    for (auto& [time, by_sensor] : scans) {
        const auto cands_a = pair_candidates(by_sensor[ida_i], by_sensor[ida_j],
                                             sa_i, sa_j, settings.bias_allowance);
        const auto cands_b = pair_candidates(by_sensor[idb_i], by_sensor[idb_j],
                                             sb_i, sb_j, settings.bias_allowance);

        std::vector<QuadCandidate> quads;
        for (const auto& ca : cands_a) {
            for (const auto& cb : cands_b) {
                const Eigen::Vector2d diff = ca.position - cb.position;
                const double slack = ca.bias_reach + cb.bias_reach;
                const Covariance2x2 r_w =
                    ca.cov + cb.cov + slack * slack * Covariance2x2::Identity();
                const double d2 = diff.dot(r_w.inverse() * diff);
                if (d2 < settings.gate_chi2) {
                    QuadCandidate q;
                    q.position = 0.5 * (ca.position + cb.position);
                    q.mahalanobis2 = d2;
                    q.dets[0] = ca.det_i;
                    q.dets[1] = ca.det_j;
                    q.dets[2] = cb.det_i;
                    q.dets[3] = cb.det_j;
                    q.bearings = {{ida_i, ca.angle_i}, {ida_j, ca.angle_j},
                                  {idb_i, cb.angle_i}, {idb_j, cb.angle_j}};
                    quads.push_back(std::move(q));
                }
            }
        }

        // One-to-one assignment: each detection feeds at most one track, so
        // cross-target ghost quads starve once the true quads are claimed.
        std::vector<std::set<int>> used(4);
        std::vector<bool> quad_used(quads.size(), false);
        std::vector<bool> track_updated(tracks.size(), false);

        auto quad_available = [&](const QuadCandidate& q) {
            for (int s = 0; s < 4; ++s) {
                if (used[s].count(q.dets[s])) {
                    return false;
                }
            }
            return true;
        };
        auto claim_quad = [&](std::size_t qi) {
            quad_used[qi] = true;
            for (int s = 0; s < 4; ++s) {
                used[s].insert(quads[qi].dets[s]);
            }
        };

        struct Assignment {
            double distance;
            std::size_t track;
            std::size_t quad;
        };
        std::vector<Assignment> options;
        for (std::size_t t = 0; t < tracks.size(); ++t) {
            for (std::size_t q = 0; q < quads.size(); ++q) {
                const double dist = (quads[q].position - tracks[t].position).norm();
                if (dist < settings.gate_radius) {
                    options.push_back({dist, t, q});
                }
            }
        }
        std::stable_sort(options.begin(), options.end(), [&](const Assignment& a,
                                                             const Assignment& b) {
            // confirmed tracks claim first, then by distance
            const bool ca = tracks[a.track].confirmed;
            const bool cb = tracks[b.track].confirmed;
            if (ca != cb) {
                return ca;
            }
            return a.distance < b.distance;
        });

        for (const auto& opt : options) {
            if (track_updated[opt.track] || quad_used[opt.quad] ||
                !quad_available(quads[opt.quad])) {
                continue;
            }
            claim_quad(opt.quad);
            track_updated[opt.track] = true;
            auto& track = tracks[opt.track];
            const auto& quad = quads[opt.quad];
            track.position = quad.position;
            track.hits += 1;
            track.misses = 0;
            if (track.confirmed) {
                release(time, quad.bearings, track.label);
            } else {
                track.buffer.emplace_back(time, quad.bearings);
                if (track.hits >= settings.persistence) {
                    track.confirmed = true;
                    for (const auto& [bt, bb] : track.buffer) {
                        release(bt, bb, track.label);
                    }
                    track.buffer.clear();
                }
            }
        }
        for (std::size_t t = 0; t < tracks.size(); ++t) {
            if (!track_updated[t]) {
                tracks[t].misses += 1;
            }
        }
        tracks.erase(std::remove_if(tracks.begin(), tracks.end(),
                                    [&](const CandidateTrack& t) {
                                        return t.misses > settings.miss_limit;
                                    }),
                     tracks.end());

        // births from leftover quads, in discovery order
        for (std::size_t q = 0; q < quads.size(); ++q) {
            if (quad_used[q] || !quad_available(quads[q])) {
                continue;
            }
            claim_quad(q);
            CandidateTrack track;
            track.label = next_label++;
            track.position = quads[q].position;
            track.hits = 1;
            track.buffer.emplace_back(time, quads[q].bearings);
            if (settings.persistence <= 1) {
                track.confirmed = true;
                release(time, quads[q].bearings, track.label);
                track.buffer.clear();
            }
            tracks.push_back(std::move(track));
        }
    }

    std::stable_sort(out.begin(), out.end(), [](const BearingReport& a, const BearingReport& b) {
        if (a.time != b.time) return a.time < b.time;
        if (a.target != b.target) return a.target < b.target;
        return a.sensor_id < b.sensor_id;
    });
    return out;
}

std::vector<BearingFrame> true_bearing_frames(const ScenarioConfig& cfg) {
    ScenarioConfig clean = cfg;
    clean.truth_q = 0.0;
    std::mt19937_64 rng(0);
    const TruthData truth = generate_truth(clean, rng);

    std::vector<BearingFrame> frames;
    frames.reserve(cfg.targets.size() * cfg.steps);
    for (std::size_t t = 0; t < truth.size(); ++t) {
        for (int k = 0; k < cfg.steps; ++k) {
            BearingFrame frame;
            frame.angles.resize(cfg.sensors.size());
            const Position2D pos(truth[t][k][0], truth[t][k][2]);
            for (std::size_t s = 0; s < cfg.sensors.size(); ++s) {
                frame.angles[s] = bearing_from(cfg.sensors[s].position, pos);
            }
            frames.push_back(std::move(frame));
        }
    }
    return frames;
}

int thread_budget() {
    int hw = static_cast<int>(std::thread::hardware_concurrency());
    if (hw < 1) {
        hw = 1;
    }
    if (const char* env = std::getenv("BEARING_REG_THREADS")) {
        const int cap = std::atoi(env);
        if (cap >= 1) {
            return std::min(hw, cap);
        }
    }
    return hw;
}

namespace {

struct RunOutput {
    bool ok = false;
    Eigen::VectorXd bias_error;
    std::vector<TrackHistory> corrected_tracks;
    std::vector<TrackHistory> uncorrected_tracks;
    TruthData truth;
};

BiasVector true_bias_of(const ScenarioConfig& cfg) {
    Eigen::VectorXd b(cfg.sensors.size());
    for (std::size_t s = 0; s < cfg.sensors.size(); ++s) {
        b[s] = cfg.sensors[s].true_bias;
    }
    return BiasVector(b, cfg.ga.lower_bound, cfg.ga.upper_bound);
}

RunOutput run_pipeline(const ScenarioConfig& cfg, const PairingPlan& plan,
                       const CrlbResult& bound, std::uint64_t run_index) {
    RunOutput out;
    std::mt19937_64 sim_rng(derive_seed(cfg.seed, 2 * run_index));

    out.truth = generate_truth(cfg, sim_rng);
    std::vector<BearingReport> reports = generate_bearings(out.truth, cfg.sensors, sim_rng);
    if (cfg.mode == ScenarioMode::centralized) {
        const auto detections =
            apply_detection_and_clutter(reports, cfg.clutter, cfg.sensors, cfg.steps, sim_rng);
        AssociationSettings assoc;
        assoc.persistence = cfg.persistence;
        reports = prune_and_associate(detections, plan, cfg.sensors, assoc);
    }

    const PseudoBatch batch = build_pseudo_measurements(reports, plan, cfg.sensors);
    if (batch.empty()) {
        return out;
    }

    GASettings settings = cfg.ga;
    settings.seed = derive_seed(cfg.seed, 2 * run_index + 1);
    const BiasEstimate estimate = estimate_bias_batch(batch, plan, cfg.sensors, settings);

    const BiasVector b_true = true_bias_of(cfg);
    out.bias_error = estimate.bias.offsets - b_true.offsets;

    if (cfg.mode == ScenarioMode::distributed) {
        const MotionModel tracker_model{cfg.sample_time, cfg.tracker_q, cfg.tracker_q};
        const auto corrected = correct_bearings(reports, cfg.sensors, estimate.bias,
                                                bound, cfg.crlb_scale);
        out.corrected_tracks = run_tracker(corrected, plan, cfg.sensors, tracker_model);
        const auto raw = correct_bearings(reports, cfg.sensors,
                                          BiasVector::zeros(static_cast<int>(cfg.sensors.size()),
                                                            cfg.ga.lower_bound, cfg.ga.upper_bound),
                                          std::nullopt, 0.0);
        out.uncorrected_tracks = run_tracker(raw, plan, cfg.sensors, tracker_model);
    }
    out.ok = true;
    return out;
}

/// Mean-over-targets RMSE curves; every (run, target) history must share the
/// same time base.
RmseCurve fold_rmse(const std::vector<RunOutput>& runs, bool corrected) {
    std::map<int, std::vector<TrackHistory>> per_target;
    const TruthData* truth0 = nullptr;
    for (const auto& run : runs) {
        if (!run.ok) {
            continue;
        }
        truth0 = &run.truth;
        for (const auto& h : (corrected ? run.corrected_tracks : run.uncorrected_tracks)) {
            per_target[h.target].push_back(h);
        }
    }
    RmseCurve folded;
    if (per_target.empty() || truth0 == nullptr) {
        return folded;
    }

    bool first = true;
    for (auto& [target, histories] : per_target) {
        // per-run truth differs; accumulate squared errors against each run's own truth
        std::vector<double> sum_sq;
        int start = histories.front().points.front().time;
        sum_sq.assign(histories.front().points.size(), 0.0);
        std::size_t n_runs = 0;
        for (const auto& run : runs) {
            if (!run.ok) {
                continue;
            }
            const auto& source = corrected ? run.corrected_tracks : run.uncorrected_tracks;
            for (const auto& h : source) {
                if (h.target != target) {
                    continue;
                }
                if (h.points.front().time != start || h.points.size() != sum_sq.size()) {
                    throw NumericalFailureError("monte_carlo: mismatched track time bases");
                }
                for (std::size_t k = 0; k < h.points.size(); ++k) {
                    const auto& state = run.truth[target][start + k];
                    const double ex = h.points[k].mean[0] - state[0];
                    const double ey = h.points[k].mean[2] - state[2];
                    sum_sq[k] += ex * ex + ey * ey;
                }
                ++n_runs;
            }
        }
        if (first) {
            folded.start_time = start;
            folded.values.assign(sum_sq.size(), 0.0);
            first = false;
        }
        for (std::size_t k = 0; k < sum_sq.size() && k < folded.values.size(); ++k) {
            folded.values[k] += sum_sq[k] / static_cast<double>(n_runs);
        }
    }
    for (auto& v : folded.values) {
        v = std::sqrt(v / static_cast<double>(per_target.size()));
    }
    return folded;
}

} // namespace

MonteCarloResult monte_carlo(const ScenarioConfig& cfg, int runs, int threads) {
    cfg.validate();
    if (runs < 1) {
        throw InvalidArgumentError("monte_carlo: runs must be >= 1");
    }
    const auto t_start = std::chrono::steady_clock::now();

    std::vector<int> ids;
    for (const auto& s : cfg.sensors) {
        ids.push_back(s.id);
    }
    const PairingPlan plan = plan_pairing(ids);

    const auto frames = true_bearing_frames(cfg);
    const CrlbResult bound = crlb(fim(frames, plan, cfg.sensors, true_bias_of(cfg)));

    if (threads <= 0) {
        threads = thread_budget();
    }
    threads = std::min(threads, runs);

    std::vector<RunOutput> outputs(runs);
    std::vector<std::thread> workers;
    std::atomic<int> next_run{0};
    for (int w = 0; w < threads; ++w) {
        workers.emplace_back([&]() {
            while (true) {
                const int r = next_run.fetch_add(1);
                if (r >= runs) {
                    break;
                }
                try {
                    outputs[r] = run_pipeline(cfg, plan, bound, static_cast<std::uint64_t>(r));
                } catch (const Error&) {
                    outputs[r].ok = false;
                }
            }
        });
    }
    for (auto& w : workers) {
        w.join();
    }

    MonteCarloResult result;
    result.crlb = bound;
    const int n_sensors = static_cast<int>(cfg.sensors.size());
    result.bias_rmse = Eigen::VectorXd::Zero(n_sensors);

    int ok_runs = 0;
    for (const auto& out : outputs) {
        if (out.ok) {
            ++ok_runs;
        }
    }
    result.failed_runs = runs - ok_runs;
    if (ok_runs > 0) {
        result.bias_errors = Eigen::MatrixXd::Zero(ok_runs, n_sensors);
        int row = 0;
        for (const auto& out : outputs) {
            if (!out.ok) {
                continue;
            }
            result.bias_errors.row(row++) = out.bias_error.transpose();
        }
        result.bias_rmse =
            (result.bias_errors.array().square().colwise().mean()).sqrt().matrix();
    }

    if (cfg.mode == ScenarioMode::distributed && ok_runs > 0) {
        result.rmse_corrected = fold_rmse(outputs, true);
        result.rmse_uncorrected = fold_rmse(outputs, false);

        // Corrected measurement-noise floor: per step, the tightest planned
        // pair triangulation covariance at the true geometry with inflated
        // variances, averaged over targets.
        std::vector<double> inflated(cfg.sensors.size());
        for (std::size_t s = 0; s < cfg.sensors.size(); ++s) {
            inflated[s] = cfg.sensors[s].sigma_theta * cfg.sensors[s].sigma_theta +
                          cfg.crlb_scale * bound.covariance_bound(static_cast<int>(s),
                                                                  static_cast<int>(s));
        }
        ScenarioConfig clean = cfg;
        clean.truth_q = 0.0;
        std::mt19937_64 rng0(0);
        const TruthData mean_truth = generate_truth(clean, rng0);
        result.position_floor.assign(cfg.steps, 0.0);
        for (int k = 0; k < cfg.steps; ++k) {
            double acc = 0.0;
            int counted = 0;
            for (std::size_t t = 0; t < mean_truth.size(); ++t) {
                const Position2D pos(mean_truth[t][k][0], mean_truth[t][k][2]);
                double best = std::numeric_limits<double>::infinity();
                for (const auto& [id_i, id_j] : plan.pairs) {
                    const int i = sensor_index(cfg.sensors, id_i);
                    const int j = sensor_index(cfg.sensors, id_j);
                    try {
                        const double ti = bearing_from(cfg.sensors[i].position, pos);
                        const double tj = bearing_from(cfg.sensors[j].position, pos);
                        const Position2D pt = triangulate(cfg.sensors[i], cfg.sensors[j], ti, tj);
                        Covariance2x2 r_polar = Covariance2x2::Zero();
                        r_polar(0, 0) = inflated[i];
                        r_polar(1, 1) = inflated[j];
                        const Covariance2x2 cov = transform_covariance(
                            pair_jacobian(cfg.sensors[i], cfg.sensors[j], pt), r_polar);
                        best = std::min(best, std::sqrt(cov.trace()));
                    } catch (const DegenerateGeometryError&) {
                    }
                }
                if (std::isfinite(best)) {
                    acc += best;
                    ++counted;
                }
            }
            result.position_floor[k] = counted ? acc / counted : 0.0;
        }
    }

    result.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
    return result;
}

} // namespace bearingreg
