#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "bosebox/spectrum.hpp"

namespace bosebox::cli {

struct RunConfig {
    std::array<double, 3> alphas{};
    std::vector<double> volumes;
    double beta = 1.0;
    std::optional<double> rho;
    std::optional<double> rho_over_rho_c;
    Mode mode{};
    std::vector<double> lambda_grid{0.1, 1.0, 10.0};
    double energy_tail_tol = 1e-12;
    int series_M = 1000;
    int n_max = 50'000;
    bool allow_large_n = false;
    double solver_tol = 1e-12;
    int max_iter = 200;
    std::string format = "csv";
    std::string path;
    std::optional<double> emax;
    int spectrum_count = 10;
    std::vector<double> eta_grid{0.5, 1.0, 2.0, 5.0};
    double epsilon = 0.1;
    int ladder_count = 10;
    GapConvention gap_convention = GapConvention::Exact;
    std::vector<std::string> sweep_commands{"gc", "canonical"};
    int threads = 0;  // 0: hardware concurrency

    double density() const;  // rho, or rho_over_rho_c * rho_c(beta)
};

// Throws ConfigError naming the offending field.
RunConfig parse_config(const nlohmann::json& j);
// key=value with a dotted key; the value is read as JSON when it parses, else as a string.
void apply_override(nlohmann::json& j, const std::string& assignment);

struct ResultRow {
    std::string command;
    double volume;  // 0 for volume-independent limit rows
    std::string quantity;
    std::string mode;
    double param;
    double value;
    double error_budget;
};

std::vector<ResultRow> cmd_spectrum(const RunConfig& c);
std::vector<ResultRow> cmd_gc(const RunConfig& c);
std::vector<ResultRow> cmd_canonical(const RunConfig& c);
std::vector<ResultRow> cmd_kac(const RunConfig& c);
std::vector<ResultRow> cmd_limits(const RunConfig& c);
std::vector<ResultRow> cmd_fluct(const RunConfig& c);
std::vector<ResultRow> cmd_sweep(const RunConfig& c);

std::vector<ResultRow> run_command(const std::string& name, const RunConfig& c);

// 17 significant digits, scientific, locale independent.
std::string format_number(double x);
std::string render(const std::vector<ResultRow>& rows, const RunConfig& c, const std::string& format);
// Renders fully, then writes a temporary file and renames it over path.
void write_atomic(const std::string& path, const std::string& content);

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitNumerical = 3;

int run(int argc, const char* const* argv);

}  // namespace bosebox::cli
