#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "semicl/hadamard4d.hpp"
#include "semicl/perturb.hpp"

namespace semicl::cli {

inline constexpr int kSchemaVersion = 1;

struct Profile {
    std::string kind = "zero";  ///< zero | gaussian | cosine
    std::vector<double> args;

    Vec sample(const LatticeSpec& spec) const;
    std::string str() const;
};

Profile parse_profile(const std::string& text);

/// Arithmetic on numbers and pi with + - * / and parentheses.
double eval_expression(const std::string& text);

struct Scenario {
    // lattice
    int n_x = 64;
    double L = 0.0;
    double dt = 0.0;
    int n_t = 200;
    double t_i = 0.0, t_on = 0.0, t_f = 0.0;
    // physics
    CouplingConfig coupling;
    // state
    std::string state = "vacuum";  ///< vacuum | thermal | file
    double temperature = 0.0;
    std::string state_path;
    // classical
    Profile varsigma, varpi;
    // mode
    std::string mode = "switched";  ///< switched | always_on_corrected | restart
    double t_restart = 0.0;
    // output
    std::string directory = "out";
    std::vector<std::string> formats{"csv", "json"};
    int stride = 10;
    bool timings = false;
    Exec exec = Exec::parallel;
};

/// Parses key = value sections; unknown sections or keys are parse errors.
Scenario parse_scenario(const std::string& text);
/// Reads a config file; an argument that is not a file but contains '=' is taken as inline config text.
Scenario load_scenario(const std::string& path);

LatticeSpec scenario_lattice(const Scenario& s);

CauchyData2pt load_state_json(const std::string& path, const LatticeSpec& spec);
void save_state_json(const std::string& path, const CauchyData2pt& data);

struct RunResult {
    SolutionTower tower;
    int restart_slice = -1;
    std::optional<SolutionTower> continuation;
};

/// Builds and solves the scenario; restart mode stitches the continuation after the restart slice.
RunResult execute(const Scenario& s, const TowerOptions& options = {});

/// Per-order psi (and likewise phi2, g) on slice n of the stitched run.
const Vec& stitched_psi(const RunResult& r, int k, int n);
const Vec& stitched_phi2(const RunResult& r, int k, int n);

nlohmann::ordered_json config_echo(const Scenario& s, const LatticeSpec& spec);

/// `run`: writes CSV files and report.json; returns the exit status.
int run_command(const std::string& config_path, std::ostream& diag);

/// `verify`: diagnostic suite only; writes report.json.
int verify_command(const std::string& config_path, std::ostream& diag);

struct TableRequest {
    double m = 1.0;
    double ell = 1.0;
    double ell_seed = 0.0;
    int N = 1, K = 0, P = 0;
    std::string psi_json = "[]";
    std::string out = "hadamard_table.json";
};

std::vector<h4d::PsiPolynomial> parse_psi_json(const std::string& text);
nlohmann::ordered_json hadamard_table(const TableRequest& r);
int hadamard_table_command(const TableRequest& r, std::ostream& diag);

/// Maps library errors to exit codes 2/3/4 with an `ERROR:` line.
int report_error(const std::exception& e, std::ostream& diag);

struct RestartCheck {
    int slice = 0;
    std::vector<double> split_vs_unsplit;  ///< per order
    std::vector<double> discretization;    ///< per order, against a 2x refined run
    bool passes = false;
};

/// Split run against the unsplit spliced run, with a refined-run error estimate.
RestartCheck restart_equivalence(const Scenario& s);

/// Shared entry point for the executable.
int main_entry(int argc, char** argv);

}  // namespace semicl::cli
