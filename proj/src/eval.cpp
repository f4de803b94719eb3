#include "cfxcert/eval.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "cfxcert/common.hpp"
#include "cfxcert/jsonio.hpp"
#include "cfxcert/kernels.hpp"
#include "cfxcert/log.hpp"
#include "cfxcert/milp.hpp"
#include "cfxcert/rng.hpp"

namespace cfxcert {

double normalized_l1(const Vector& a, const Vector& b) {
    if (a.size() != b.size())
        throw ShapeError("normalized_l1: vector sizes differ");
    if (a.empty())
        return 0.0;
    return kernels::sum_abs_diff(a.data(), b.data(), a.size()) / static_cast<double>(a.size());
}

RobustnessChecker::RobustnessChecker(const FFNN& model, const PlausibleShiftSet& shifts)
    : model_(&model), inn_(build_abstraction(model, shifts)) {}

std::vector<Interval> RobustnessChecker::outputs(const Vector& x) const {
    std::vector<Interval> prop = inn_forward(inn_, x);
    if (decide_intervals(inn_.output_mode, prop))
        return prop;
    return output_ranges(inn_, x).outputs; // already clamped into propagation
}

std::optional<int> RobustnessChecker::verdict(const Vector& x) const {
    return decide_intervals(inn_.output_mode, outputs(x));
}

bool RobustnessChecker::sound_at(const Vector& x) const {
    return verdict(x) == std::optional<int>(classify(*model_, x));
}

bool is_sound(const FFNN& model, const PlausibleShiftSet& shifts, const Vector& x) {
    return RobustnessChecker(model, shifts).sound_at(x);
}

bool is_delta_robust(const FFNN& model, const PlausibleShiftSet& shifts, const Vector& x, int c,
                     const Vector& x_prime) {
    if (c != 0 && c != 1)
        throw ConfigError("robustness verdicts are defined for binary classes 0/1");
    RobustnessChecker checker(model, shifts);
    if (!checker.sound_at(x))
        throw UnsoundShiftError("shift set is unsound at the query input; "
                                "robustness would be vacuous");
    return checker.verdict(x_prime) == std::optional<int>(1 - c);
}

namespace {

DeltaValidity validity_with(const RobustnessChecker& checker, const std::vector<EvalCase>& cases) {
    DeltaValidity v;
    for (const EvalCase& e : cases) {
        if (!checker.sound_at(e.x)) {
            ++v.unsound;
            continue;
        }
        ++v.sound;
        if (!e.x_prime) {
            ++v.absent;
            continue;
        }
        if (checker.verdict(*e.x_prime) == std::optional<int>(1 - e.c))
            ++v.robust;
    }
    if (v.sound > 0)
        v.fraction = static_cast<double>(v.robust) / static_cast<double>(v.sound);
    return v;
}

} // namespace

DeltaValidity delta_validity(const FFNN& model, const std::vector<EvalCase>& cases,
                             const PlausibleShiftSet& shifts) {
    return validity_with(RobustnessChecker(model, shifts), cases);
}

DeltaEstimate estimate_delta_max(const FFNN& base, const Dataset& d2, const TrainConfig& cfg,
                                 const std::vector<double>& fractions, std::size_t repeats,
                                 std::size_t min_sound, double p, std::uint64_t seed) {
    if (fractions.empty())
        throw ConfigError("estimate_delta_max: empty fraction grid");
    if (repeats == 0)
        throw ConfigError("estimate_delta_max: repeats must be positive");
    if (d2.size() == 0)
        throw ConfigError("estimate_delta_max: empty retraining dataset");
    for (std::size_t i = 1; i < fractions.size(); ++i)
        if (fractions[i] <= fractions[i - 1])
            throw ConfigError("estimate_delta_max: fractions must increase");

    const std::size_t pool = d2.size();
    const std::size_t threshold = std::min(min_sound, (pool + 1) / 2);

    DeltaEstimate est;
    bool any_pass = false;
    std::ostringstream diag;
    Rng rng(seed);

    for (double frac : fractions) {
        if (frac <= 0.0 || frac > 100.0)
            throw ConfigError("estimate_delta_max: fractions are percentages in (0, 100]");
        std::size_t subset_size = std::max<std::size_t>(
            1, static_cast<std::size_t>(std::llround(frac / 100.0 * static_cast<double>(pool))));

        double delta_a = 0.0;
        for (std::size_t r = 0; r < repeats; ++r) {
            std::vector<std::size_t> idx(pool);
            std::iota(idx.begin(), idx.end(), 0);
            rng.shuffle(idx);

            Dataset subset;
            subset.spec = d2.spec;
            subset.rows = Matrix(subset_size, d2.rows.cols());
            for (std::size_t i = 0; i < subset_size; ++i) {
                Vector row = d2.row(idx[i]);
                std::copy(row.begin(), row.end(), subset.rows.row(i));
                subset.labels.push_back(d2.labels[idx[i]]);
            }

            TrainConfig rcfg = cfg;
            rcfg.seed = seed * 1000003ULL + static_cast<std::uint64_t>(r) + 1;
            FFNN retrained = retrain_incremental(base, subset, rcfg);
            delta_a = std::max(delta_a, p_distance(base, retrained, p));
        }

        est.samples.push_back({frac, delta_a});
        if (delta_a <= 0.0) {
            diag << "fraction " << frac << "%: delta_a = 0; ";
            break;
        }
        RobustnessChecker checker(base, PlausibleShiftSet{delta_a, p});
        std::size_t sound = 0;
        for (std::size_t i = 0; i < pool; ++i)
            if (checker.sound_at(d2.row(i)))
                ++sound;
        log::debug("fraction " + format_double(frac) + "%: delta_a=" + format_double(delta_a) +
                   ", sound " + std::to_string(sound) + "/" + std::to_string(pool));
        if (sound < threshold) {
            diag << "fraction " << frac << "%: only " << sound << "/" << pool
                 << " sound instances (need " << threshold << "); ";
            break;
        }
        any_pass = true;
        est.delta_max = delta_a;
        est.sound_instance_count = sound;
    }

    if (!any_pass)
        throw SolverError("no fraction produced a positive, sufficiently sound delta: " +
                          diag.str());
    return est;
}

std::vector<LofResult> lof_score(const Matrix& reference, const std::vector<Vector>& points,
                                 std::size_t k) {
    const std::size_t n = reference.rows();
    const std::size_t dim = reference.cols();
    if (k == 0)
        throw ConfigError("lof_score: k must be positive");
    if (n < k + 1)
        throw ConfigError("lof_score: need at least k+1 reference rows");

    auto dist = [&](const double* a, const double* b) {
        return std::sqrt(kernels::sum_sq_diff(a, b, dim));
    };

    // k nearest reference rows for an arbitrary point; `self` excludes one row.
    auto neighbours = [&](const double* pt, std::ptrdiff_t self) {
        std::vector<std::pair<double, std::size_t>> all;
        all.reserve(n);
        for (std::size_t j = 0; j < n; ++j) {
            if (static_cast<std::ptrdiff_t>(j) == self)
                continue;
            all.push_back({dist(pt, reference.row(j)), j});
        }
        std::partial_sort(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(k), all.end());
        all.resize(k);
        return all;
    };

    std::vector<std::vector<std::pair<double, std::size_t>>> ref_nn(n);
    std::vector<double> k_dist(n), ref_lrd(n);
    for (std::size_t i = 0; i < n; ++i) {
        ref_nn[i] = neighbours(reference.row(i), static_cast<std::ptrdiff_t>(i));
        k_dist[i] = ref_nn[i].back().first;
    }
    for (std::size_t i = 0; i < n; ++i) {
        double reach = 0.0;
        for (auto [d, j] : ref_nn[i])
            reach += std::max(d, k_dist[j]);
        ref_lrd[i] = 1.0 / (reach / static_cast<double>(k) + 1e-10);
    }

    std::vector<LofResult> out;
    out.reserve(points.size());
    for (const Vector& pt : points) {
        if (pt.size() != dim)
            throw ShapeError("lof_score: point width differs from reference");
        auto nn = neighbours(pt.data(), -1);
        double reach = 0.0, nbr_lrd = 0.0;
        for (auto [d, j] : nn) {
            reach += std::max(d, k_dist[j]);
            nbr_lrd += ref_lrd[j];
        }
        double lrd = 1.0 / (reach / static_cast<double>(k) + 1e-10);
        double lof = nbr_lrd / static_cast<double>(k) / lrd;
        LofResult r;
        r.score = -lof;
        r.label = r.score < -1.5 ? -1 : 1;
        out.push_back(r);
    }
    return out;
}

EvalReport evaluate(const FFNN& before, const FFNN& after, const std::vector<EvalCase>& cases,
                    const PlausibleShiftSet& shifts, const Matrix* lof_reference, std::size_t k,
                    std::vector<double> delta_grid) {
    EvalReport rep;
    rep.total = cases.size();

    std::size_t vm1_ok = 0, vm2_ok = 0;
    double l1_sum = 0.0;
    std::vector<Vector> present_points;
    for (const EvalCase& e : cases) {
        if (!e.x_prime) {
            ++rep.absent;
            continue;
        }
        ++rep.present;
        if (classify(before, *e.x_prime) == 1 - e.c)
            ++vm1_ok;
        if (classify(after, *e.x_prime) == 1 - e.c)
            ++vm2_ok;
        l1_sum += normalized_l1(e.x, *e.x_prime);
        present_points.push_back(*e.x_prime);
    }
    if (rep.present > 0) {
        double denom = static_cast<double>(rep.present);
        rep.vm1 = static_cast<double>(vm1_ok) / denom;
        rep.vm2 = static_cast<double>(vm2_ok) / denom;
        rep.mean_l1 = l1_sum / denom;
        if (lof_reference) {
            auto scores = lof_score(*lof_reference, present_points, k);
            double label_sum = 0.0;
            for (const LofResult& s : scores)
                label_sum += s.label;
            rep.mean_lof_label = label_sum / denom;
        }
    }

    if (delta_grid.empty())
        delta_grid.push_back(shifts.delta);
    std::sort(delta_grid.begin(), delta_grid.end());
    delta_grid.erase(std::unique(delta_grid.begin(), delta_grid.end()), delta_grid.end());
    for (double d : delta_grid) {
        DeltaValidity v = delta_validity(before, cases, PlausibleShiftSet{d, shifts.p});
        rep.delta_validity_curve.push_back({d, v.fraction});
    }
    rep.unsound = delta_validity(before, cases, shifts).unsound;
    return rep;
}

nlohmann::json eval_report_to_json(const EvalReport& r) {
    nlohmann::json j;
    auto put = [&](const char* key, const std::optional<double>& v) {
        if (v)
            j[key] = format_double(*v);
        else
            j[key] = nullptr;
    };
    put("vm1", r.vm1);
    put("vm2", r.vm2);
    put("mean_l1", r.mean_l1);
    put("mean_lof_label", r.mean_lof_label);
    j["metrics_empty"] = r.present == 0;
    j["total"] = r.total;
    j["present"] = r.present;
    j["absent"] = r.absent;
    j["unsound"] = r.unsound;
    nlohmann::json curve = nlohmann::json::array();
    for (auto [d, f] : r.delta_validity_curve)
        curve.push_back({{"delta", format_double(d)}, {"validity", format_double(f)}});
    j["delta_validity_curve"] = curve;
    return j;
}

std::string validity_curve_csv(const EvalReport& r) {
    std::string out = "delta,validity\n";
    for (auto [d, f] : r.delta_validity_curve)
        out += format_double(d) + "," + format_double(f) + "\n";
    return out;
}

std::string delta_estimate_csv(const DeltaEstimate& e) {
    std::string out = "fraction,delta\n";
    for (auto [frac, d] : e.samples)
        out += format_double(frac) + "," + format_double(d) + "\n";
    return out;
}

} // namespace cfxcert
