// Writes the bundled demo datasets. Usage: gen-demo-data [outdir]
//
//   blobs.csv / blobs_spec.json  two Gaussian blobs in the unit square
//   loans.csv / loans_spec.json  heterogeneous loan table with a planted
//                                approval rule (continuous income and age,
//                                ordinal education, one-hot employment)

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "cfxcert/jsonio.hpp"
#include "cfxcert/rng.hpp"

using cfxcert::format_double;
using cfxcert::Rng;

namespace {

void write_file(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path);
    if (!out) {
        std::cerr << "cannot write " << path << "\n";
        std::exit(1);
    }
    out << text;
    std::cout << "wrote " << path.string() << "\n";
}

std::string blobs_csv(std::size_t per_class) {
    Rng rng(7);
    std::string csv = "f0,f1,label\n";
    const double cx[2] = {0.3, 0.75};
    const double cy[2] = {0.3, 0.7};
    for (std::size_t i = 0; i < per_class; ++i) {
        for (int cls = 0; cls < 2; ++cls) {
            double x = std::clamp(rng.normal(cx[cls], 0.12), 0.0, 1.0);
            double y = std::clamp(rng.normal(cy[cls], 0.12), 0.0, 1.0);
            csv += format_double(x) + "," + format_double(y) + "," + std::to_string(cls) + "\n";
        }
    }
    return csv;
}

std::string loans_csv(std::size_t rows) {
    Rng rng(11);
    struct Row {
        double income, age;
        std::size_t edu, emp;
        double score;
    };
    static const char* emps[] = {"unemployed", "self-employed", "salaried"};
    const double emp_bonus[] = {0.0, 0.25, 0.5};
    std::vector<Row> sample(rows);
    for (auto& r : sample) {
        r.income = 120.0 * std::pow(rng.uniform(), 1.3);
        r.age = rng.uniform(18.0, 80.0);
        r.edu = rng.uniform_index(4);
        r.emp = rng.uniform_index(3);
        r.score = 0.9 * (r.income / 120.0) + 0.35 * (static_cast<double>(r.edu) / 3.0) +
                  emp_bonus[r.emp] + 0.2 * ((r.age - 18.0) / 62.0) + 0.15 * rng.normal();
    }
    // Median split keeps the classes balanced regardless of the sampling.
    std::vector<double> scores;
    scores.reserve(rows);
    for (const auto& r : sample)
        scores.push_back(r.score);
    std::nth_element(scores.begin(), scores.begin() + static_cast<std::ptrdiff_t>(rows / 2),
                     scores.end());
    double threshold = scores[rows / 2];

    std::string csv = "income,age,education,employment,label\n";
    for (const auto& r : sample) {
        csv += format_double(r.income) + "," + format_double(r.age) + "," +
               std::to_string(r.edu) + "," + emps[r.emp] + "," +
               (r.score > threshold ? "1" : "0") + "\n";
    }
    return csv;
}

} // namespace

int main(int argc, char** argv) {
    std::filesystem::path outdir = argc > 1 ? argv[1] : "data";
    std::filesystem::create_directories(outdir);

    write_file(outdir / "blobs_spec.json",
               "[\n"
               "  {\"name\": \"f0\", \"kind\": \"continuous\", \"min\": 0, \"max\": 1},\n"
               "  {\"name\": \"f1\", \"kind\": \"continuous\", \"min\": 0, \"max\": 1}\n"
               "]\n");
    write_file(outdir / "blobs.csv", blobs_csv(120));

    write_file(outdir / "loans_spec.json",
               "[\n"
               "  {\"name\": \"income\", \"kind\": \"continuous\", \"min\": 0, \"max\": 120},\n"
               "  {\"name\": \"age\", \"kind\": \"continuous\", \"min\": 18, \"max\": 80},\n"
               "  {\"name\": \"education\", \"kind\": \"ordinal\", \"k\": 4},\n"
               "  {\"name\": \"employment\", \"kind\": \"discrete\",\n"
               "   \"categories\": [\"unemployed\", \"self-employed\", \"salaried\"]}\n"
               "]\n");
    write_file(outdir / "loans.csv", loans_csv(320));
    return 0;
}
