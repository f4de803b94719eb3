#include "cfxcert/cli.hpp"

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <fstream>
#include <iostream>
#include <limits>
#include <mutex>
#include <numeric>
#include <sstream>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "cfxcert/cfx.hpp"
#include "cfxcert/common.hpp"
#include "cfxcert/dataset.hpp"
#include "cfxcert/eval.hpp"
#include "cfxcert/interval.hpp"
#include "cfxcert/jsonio.hpp"
#include "cfxcert/log.hpp"
#include "cfxcert/nn.hpp"
#include "cfxcert/rng.hpp"

namespace cfxcert {
namespace {

// All flags for all subcommands; each subcommand registers the subset it uses.
struct Opts {
    std::string model, data, spec, out, retrained, cfx, grid, frozen;
    std::string p = "inf";
    std::string loss = "bce";
    double delta = 0.1, eps_step = 0.2, eps_max = 20.0, split = 0.8, lr = 0.5;
    std::size_t max_iter = 101, k = 20, instances = 0, jobs = 1;
    std::size_t hidden = 8, batch = 16, epochs = 200;
    std::uint64_t seed = 0;
    bool no_robust = false;
};

double parse_norm(const std::string& s) {
    if (s == "inf")
        return std::numeric_limits<double>::infinity();
    double p = parse_double_str(s, "--p");
    if (p < 0.0)
        throw ConfigError("--p must be a non-negative number or \"inf\"");
    return p;
}

Loss parse_loss(const std::string& s) {
    if (s == "bce")
        return Loss::binary_cross_entropy;
    if (s == "softmax")
        return Loss::softmax_cross_entropy;
    throw ConfigError("--loss must be \"bce\" or \"softmax\"");
}

std::string trimmed(const std::string& s) {
    std::size_t b = s.find_first_not_of(" \t");
    std::size_t e = s.find_last_not_of(" \t");
    return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
}

std::vector<double> parse_number_list(const std::string& s, const std::string& flag) {
    std::vector<double> out;
    std::stringstream ss(s);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
        cell = trimmed(cell);
        if (!cell.empty())
            out.push_back(parse_double_str(cell, flag));
    }
    if (out.empty())
        throw ConfigError(flag + ": empty list");
    return out;
}

std::vector<std::string> parse_name_list(const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
        cell = trimmed(cell);
        if (!cell.empty())
            out.push_back(cell);
    }
    return out;
}

// Writes to --out when given, stdout otherwise.
struct Sink {
    std::ofstream file;
    std::ostream* os = &std::cout;

    explicit Sink(const std::string& path) {
        if (!path.empty()) {
            file.open(path);
            if (!file)
                throw ConfigError("cannot open output file: " + path);
            os = &file;
        }
    }
    std::ostream& out() { return *os; }
};

struct VerifyPair {
    Vector x, xp;
};

// CSV with a header row, then 2n numeric columns per line: the instance
// followed by its counterfactual.
std::vector<VerifyPair> read_pairs(const std::string& path, std::size_t n) {
    std::ifstream in(path);
    if (!in)
        throw ConfigError("cannot open pair file: " + path);
    std::string line;
    if (!std::getline(in, line))
        throw ParseError(path + ": missing header row");
    std::vector<VerifyPair> pairs;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r')
            line.pop_back();
        if (trimmed(line).empty())
            continue;
        const std::string where = path + ":" + std::to_string(lineno);
        std::vector<double> cells;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ','))
            cells.push_back(parse_double_str(trimmed(cell), where));
        if (cells.size() != 2 * n)
            throw ParseError(where + ": expected " + std::to_string(2 * n) + " columns, got " +
                             std::to_string(cells.size()));
        VerifyPair pr;
        pr.x.assign(cells.begin(), cells.begin() + static_cast<std::ptrdiff_t>(n));
        pr.xp.assign(cells.begin() + static_cast<std::ptrdiff_t>(n), cells.end());
        pairs.push_back(std::move(pr));
    }
    return pairs;
}

// JSONL as produced by `generate`: x, class, x_prime (null when absent).
std::vector<EvalCase> read_cases(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw ConfigError("cannot open counterfactual file: " + path);
    std::vector<EvalCase> cases;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r')
            line.pop_back();
        if (trimmed(line).empty())
            continue;
        const std::string where = path + ":" + std::to_string(lineno);
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
        } catch (const nlohmann::json::exception& e) {
            throw ParseError(where + ": " + e.what());
        }
        if (!j.contains("x") || !j["x"].is_array())
            throw ParseError(where + ": missing \"x\" array");
        EvalCase c;
        for (const auto& v : j["x"])
            c.x.push_back(json_number(v, where + " x"));
        if (!j.contains("class") || !j["class"].is_number_integer())
            throw ParseError(where + ": missing integer \"class\"");
        c.c = j["class"].get<int>();
        if (j.contains("x_prime") && !j["x_prime"].is_null()) {
            if (!j["x_prime"].is_array())
                throw ParseError(where + ": \"x_prime\" must be an array or null");
            Vector xp;
            for (const auto& v : j["x_prime"])
                xp.push_back(json_number(v, where + " x_prime"));
            c.x_prime = std::move(xp);
        }
        cases.push_back(std::move(c));
    }
    return cases;
}

std::vector<double> resolve_grid(const Opts& o) {
    std::vector<double> grid;
    if (!o.grid.empty())
        grid = parse_number_list(o.grid, "--grid");
    else
        for (int i = 1; i <= 10; ++i)
            grid.push_back(o.delta * i / 10.0);
    for (double d : grid)
        if (!(d > 0.0))
            throw ConfigError("--grid deltas must be positive");
    std::sort(grid.begin(), grid.end());
    grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
    return grid;
}

TrainConfig train_config(const Opts& o) {
    TrainConfig cfg;
    cfg.hidden_size = o.hidden;
    cfg.learning_rate = o.lr;
    cfg.batch_size = o.batch;
    cfg.epochs = o.epochs;
    cfg.seed = o.seed;
    cfg.loss = parse_loss(o.loss);
    return cfg;
}

int cmd_train(const Opts& o) {
    if (!(o.split > 0.0) || o.split > 1.0)
        throw ConfigError("--split must be in (0, 1]");
    Dataset d = load_dataset(o.data, o.spec);
    auto [train_set, test_set] = split_dataset(d, o.split, o.seed);
    if (train_set.size() == 0)
        throw ConfigError("training split is empty");
    FFNN m = train(train_set, train_config(o));
    save_model(m, o.out);
    nlohmann::json j;
    j["model"] = o.out;
    j["train_rows"] = train_set.size();
    j["test_rows"] = test_set.size();
    j["train_accuracy"] = format_double(accuracy(m, train_set));
    j["test_accuracy"] = test_set.size() > 0
                             ? nlohmann::json(format_double(accuracy(m, test_set)))
                             : nlohmann::json();
    std::cout << j.dump() << "\n";
    return 0;
}

int cmd_verify(const Opts& o) {
    FFNN m = load_model(o.model);
    PlausibleShiftSet shifts(o.delta, parse_norm(o.p));
    RobustnessChecker checker(m, shifts);
    auto pairs = read_pairs(o.data, m.input_size());
    Sink sink(o.out);
    std::size_t robust_count = 0, unsound_count = 0;
    for (std::size_t i = 0; i < pairs.size(); ++i) {
        const auto& pr = pairs[i];
        int c = classify(m, pr.x);
        bool sound = checker.sound_at(pr.x);
        bool robust = false;
        if (sound) {
            auto v = checker.verdict(pr.xp);
            robust = v.has_value() && *v == 1 - c;
        } else {
            ++unsound_count;
        }
        auto outs = checker.outputs(pr.xp);
        nlohmann::json j;
        j["index"] = i;
        j["class"] = c;
        j["sound"] = sound;
        j["robust"] = robust;
        auto arr = nlohmann::json::array();
        for (const auto& iv : outs)
            arr.push_back({format_double(iv.lo), format_double(iv.hi)});
        j["outputs"] = arr;
        sink.out() << j.dump() << "\n";
        if (robust)
            ++robust_count;
    }
    log::info("verify: " + std::to_string(robust_count) + "/" + std::to_string(pairs.size()) +
              " robust, " + std::to_string(unsound_count) + " unsound");
    return robust_count == pairs.size() ? 0 : 1;
}

int cmd_generate(const Opts& o) {
    FFNN m = load_model(o.model);
    Dataset d = load_dataset(o.data, o.spec);
    PlausibleShiftSet shifts(o.delta, parse_norm(o.p));
    std::vector<std::string> frozen = parse_name_list(o.frozen);

    std::vector<std::size_t> idx(d.size());
    std::iota(idx.begin(), idx.end(), 0);
    Rng rng(o.seed);
    rng.shuffle(idx);
    std::size_t n = o.instances == 0 ? idx.size() : std::min(o.instances, idx.size());
    idx.resize(n);
    std::sort(idx.begin(), idx.end());

    struct Row {
        std::size_t index = 0;
        Vector x;
        int cls = 0;
        CfxResult r;
    };
    std::vector<Row> rows(n);
    std::atomic<std::size_t> next{0};
    std::exception_ptr first_error;
    std::mutex error_mu;
    auto worker = [&]() {
        for (;;) {
            std::size_t slot = next.fetch_add(1);
            if (slot >= n)
                return;
            try {
                Vector x = d.row(idx[slot]);
                CfxQuery q = make_cfx_query(m, x, &d.spec, frozen);
                CfxResult r = o.no_robust
                                  ? generate_cfx(q)
                                  : generate_robust_cfx(q, shifts, o.max_iter, o.eps_step,
                                                        o.eps_max);
                rows[slot] = Row{idx[slot], std::move(x), q.observed_class, std::move(r)};
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mu);
                if (!first_error)
                    first_error = std::current_exception();
                return;
            }
        }
    };
    std::size_t jobs = std::clamp<std::size_t>(o.jobs, 1, std::max<std::size_t>(n, 1));
    if (jobs <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(jobs);
        for (std::size_t t = 0; t < jobs; ++t)
            pool.emplace_back(worker);
        for (auto& th : pool)
            th.join();
    }
    if (first_error)
        std::rethrow_exception(first_error);

    Sink sink(o.out);
    std::size_t present = 0, robust = 0;
    for (const auto& row : rows) {
        nlohmann::json j = cfx_to_json(row.r);
        j["index"] = row.index;
        auto xs = nlohmann::json::array();
        for (double v : row.x)
            xs.push_back(format_double(v));
        j["x"] = xs;
        j["class"] = row.cls;
        sink.out() << j.dump() << "\n";
        if (row.r.x_prime)
            ++present;
        if (row.r.robust == RobustFlag::yes)
            ++robust;
    }
    log::info("generate: " + std::to_string(present) + "/" + std::to_string(n) + " present, " +
              std::to_string(robust) + " certified robust");
    return 0;
}

int cmd_sweep(const Opts& o) {
    FFNN m = load_model(o.model);
    auto cases = read_cases(o.cfx);
    double p = parse_norm(o.p);
    std::string csv = "delta,validity\n";
    for (double dv : resolve_grid(o)) {
        DeltaValidity v = delta_validity(m, cases, PlausibleShiftSet(dv, p));
        csv += format_double(dv) + "," + format_double(v.fraction) + "\n";
    }
    Sink sink(o.out);
    sink.out() << csv;
    return 0;
}

int cmd_estimate_delta(const Opts& o) {
    FFNN base = load_model(o.model);
    Dataset d2 = load_dataset(o.data, o.spec);
    std::vector<double> fractions = o.grid.empty()
                                        ? std::vector<double>{20, 40, 60, 80, 100}
                                        : parse_number_list(o.grid, "--grid");
    std::size_t min_sound = o.instances == 0 ? 50 : o.instances;
    DeltaEstimate est = estimate_delta_max(base, d2, train_config(o), fractions, 5, min_sound,
                                           parse_norm(o.p), o.seed);
    if (!o.out.empty()) {
        Sink sink(o.out);
        sink.out() << delta_estimate_csv(est);
    }
    nlohmann::json j;
    j["delta_max"] = format_double(est.delta_max);
    j["sound_instances"] = est.sound_instance_count;
    auto arr = nlohmann::json::array();
    for (const auto& [frac, dv] : est.samples)
        arr.push_back({{"fraction", format_double(frac)}, {"delta", format_double(dv)}});
    j["samples"] = arr;
    std::cout << j.dump() << "\n";
    return 0;
}

int cmd_eval(const Opts& o) {
    FFNN before = load_model(o.model);
    FFNN after = o.retrained.empty() ? before : load_model(o.retrained);
    auto cases = read_cases(o.cfx);
    PlausibleShiftSet shifts(o.delta, parse_norm(o.p));
    std::optional<Dataset> reference;
    if (!o.data.empty()) {
        if (o.spec.empty())
            throw ConfigError("--data needs --spec to decode the reference rows");
        reference = load_dataset(o.data, o.spec);
    }
    std::vector<double> grid;
    if (!o.grid.empty()) {
        grid = parse_number_list(o.grid, "--grid");
        for (double dv : grid)
            if (!(dv > 0.0))
                throw ConfigError("--grid deltas must be positive");
    }
    EvalReport rep = evaluate(before, after, cases, shifts,
                              reference ? &reference->rows : nullptr, o.k, grid);
    Sink sink(o.out);
    sink.out() << eval_report_to_json(rep).dump(2) << "\n";
    if (!o.out.empty()) {
        std::ofstream csv(o.out + ".csv");
        if (!csv)
            throw ConfigError("cannot open output file: " + o.out + ".csv");
        csv << validity_curve_csv(rep);
    }
    return 0;
}

} // namespace

int cli_run(const std::vector<std::string>& args) {
    CLI::App app{"Certifiably robust counterfactual explanations for ReLU networks"};
    app.require_subcommand(1);

    Opts o;
    int rc = 0;

    auto add_shift = [&](CLI::App* s) {
        s->add_option("--delta", o.delta, "Magnitude of the plausible parameter shifts")
            ->capture_default_str();
        s->add_option("--p", o.p, "Shift norm: a number, or \"inf\" for max-norm")
            ->capture_default_str();
    };
    auto add_train = [&](CLI::App* s) {
        s->add_option("--hidden", o.hidden, "Hidden layer width")->capture_default_str();
        s->add_option("--lr", o.lr, "SGD learning rate")->capture_default_str();
        s->add_option("--batch", o.batch, "Mini-batch size")->capture_default_str();
        s->add_option("--epochs", o.epochs, "Training epochs")->capture_default_str();
        s->add_option("--loss", o.loss, "Loss: bce or softmax")->capture_default_str();
    };

    CLI::App* c_train = app.add_subcommand("train", "Train a feed-forward network on a CSV dataset");
    c_train->add_option("--data", o.data, "Dataset CSV")->required();
    c_train->add_option("--spec", o.spec, "Feature spec JSON")->required();
    c_train->add_option("--out", o.out, "Where to write the model JSON")->required();
    c_train->add_option("--split", o.split, "Training fraction of the rows")->capture_default_str();
    c_train->add_option("--seed", o.seed, "RNG seed")->capture_default_str();
    add_train(c_train);
    c_train->callback([&] { rc = cmd_train(o); });

    CLI::App* c_verify =
        app.add_subcommand("verify", "Check (x, x') pairs for robustness under parameter shifts");
    c_verify->add_option("--model", o.model, "Model JSON")->required();
    c_verify->add_option("--data", o.data,
                         "Pair CSV: header row, then the instance columns followed by the "
                         "counterfactual columns")
        ->required();
    c_verify->add_option("--out", o.out, "JSONL output path (default stdout)");
    add_shift(c_verify);
    c_verify->callback([&] { rc = cmd_verify(o); });

    CLI::App* c_gen =
        app.add_subcommand("generate", "Generate robust counterfactuals for dataset rows");
    c_gen->add_option("--model", o.model, "Model JSON")->required();
    c_gen->add_option("--data", o.data, "Dataset CSV")->required();
    c_gen->add_option("--spec", o.spec, "Feature spec JSON")->required();
    c_gen->add_option("--out", o.out, "JSONL output path (default stdout)");
    c_gen->add_option("--instances", o.instances, "How many rows to explain (0 = all)")
        ->capture_default_str();
    c_gen->add_option("--seed", o.seed, "Row-selection seed")->capture_default_str();
    c_gen->add_option("--jobs", o.jobs, "Worker threads")->capture_default_str();
    c_gen->add_option("--eps-step", o.eps_step, "Margin schedule step")->capture_default_str();
    c_gen->add_option("--eps-max", o.eps_max, "Margin schedule cap")->capture_default_str();
    c_gen->add_option("--max-iter", o.max_iter, "Margin schedule iteration cap")
        ->capture_default_str();
    c_gen->add_option("--frozen", o.frozen, "Comma-separated immutable feature names");
    c_gen->add_flag("--no-robust", o.no_robust, "Plain minimal counterfactuals, no margin loop");
    add_shift(c_gen);
    c_gen->callback([&] { rc = cmd_generate(o); });

    CLI::App* c_sweep =
        app.add_subcommand("sweep", "Validity of stored counterfactuals across a delta grid");
    c_sweep->add_option("--model", o.model, "Model JSON")->required();
    c_sweep->add_option("--cfx", o.cfx, "Counterfactual JSONL from `generate`")->required();
    c_sweep->add_option("--grid", o.grid,
                        "Comma-separated deltas (default: 10 even steps up to --delta)");
    c_sweep->add_option("--out", o.out, "CSV output path (default stdout)");
    add_shift(c_sweep);
    c_sweep->callback([&] { rc = cmd_sweep(o); });

    CLI::App* c_est = app.add_subcommand(
        "estimate-delta", "Estimate the largest sound shift magnitude via retraining");
    c_est->add_option("--model", o.model, "Base model JSON")->required();
    c_est->add_option("--data", o.data, "Retraining dataset CSV")->required();
    c_est->add_option("--spec", o.spec, "Feature spec JSON")->required();
    c_est->add_option("--grid", o.grid,
                      "Comma-separated retraining fractions in percent (default 20,40,60,80,100)");
    c_est->add_option("--instances", o.instances,
                      "Minimum sound rows required per fraction (0 = 50, capped at half the pool)")
        ->capture_default_str();
    c_est->add_option("--seed", o.seed, "Subset-sampling seed")->capture_default_str();
    c_est->add_option("--p", o.p, "Shift norm used for parameter distance")->capture_default_str();
    c_est->add_option("--out", o.out, "CSV output path for the (fraction, delta) samples");
    add_train(c_est);
    c_est->callback([&] { rc = cmd_estimate_delta(o); });

    CLI::App* c_eval =
        app.add_subcommand("eval", "Metrics table for stored counterfactuals");
    c_eval->add_option("--model", o.model, "Model JSON")->required();
    c_eval->add_option("--cfx", o.cfx, "Counterfactual JSONL from `generate`")->required();
    c_eval->add_option("--retrained", o.retrained, "Retrained model JSON for the vm2 column");
    c_eval->add_option("--data", o.data, "Reference dataset CSV for the outlier column");
    c_eval->add_option("--spec", o.spec, "Feature spec JSON (needed with --data)");
    c_eval->add_option("--k", o.k, "Neighbours for the outlier score")->capture_default_str();
    c_eval->add_option("--grid", o.grid, "Comma-separated deltas for the validity curve");
    c_eval->add_option("--out", o.out,
                       "Report JSON path; the validity curve lands next to it as <out>.csv");
    add_shift(c_eval);
    c_eval->callback([&] { rc = cmd_eval(o); });

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(std::move(reversed));
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    } catch (const UnsoundShiftError& e) {
        log::error(e.what());
        return 1;
    } catch (const SolverError& e) {
        log::error(e.what());
        return 3;
    } catch (const ResourceError& e) {
        log::error(e.what());
        return 3;
    } catch (const DivergenceError& e) {
        log::error(e.what());
        return 3;
    } catch (const std::exception& e) {
        log::error(e.what());
        return 2;
    }
    return rc;
}

} // namespace cfxcert
