#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "steklov/errors.hpp"
#include "steklov/geometry_mesh.hpp"

namespace steklov::cli {

/// Bad flag, bad value, unknown config key. Exit code 2.
class UsageError : public DomainError {
public:
    using DomainError::DomainError;
};

/// --help / --version: what() is the text to print, exit code 0.
class HelpRequested : public Error {
public:
    using Error::Error;
    int exit_code() const noexcept override { return 0; }
};

struct RunConfig {
    std::string command;

    // domain
    std::string shape = "disk";
    double R = 1.0;
    double a = 1.0;
    double b = 0.5;
    double side = 2.0;
    double radius = 1.0;
    double height = 2.0;
    double cx = 0.0;
    double cy = 0.0;
    std::string vertices;
    std::string mesh_file;

    // solver
    double L = 2.0;
    double h_max = 0.02;
    int n_max = 30;
    int k = 10;
    int m = 0;
    double p = 0.0;
    std::string p_grid = "log:1e-5:1e-2:13";
    int count = -1;

    // first passage and Monte Carlo
    double q = 1.0;
    double D = 1.0;
    double ell = 1.0;
    std::string x0;
    int K = -1;
    std::string t_grid = "log:1e-2:1e2:41";
    long walkers = 100000;
    std::uint64_t seed = 1;
    double dt = 1e-4;
    double t_max = 50.0;
    double far_radius = 10.0;
    int threads = 0;

    // validate
    bool table1 = false;
    bool identities = false;

    std::string out = ".";
    std::string format = "both";

    /// Effective option values, one "key=value" per line; goes into every output.
    std::string config_echo;

    bool axisymmetric() const;
    /// Throws GeometryError; not available for shape "mesh".
    DomainSpec domain() const;
};

/// Flags override config-file values, which override the defaults above.
/// Ranges are checked here, before anything is computed.
RunConfig parse_and_validate(const std::vector<std::string>& args);

/// Runs the command, writes artifacts under cfg.out, prints a summary to `log`.
/// Returns 0, or 5 when a validation check fails; library errors propagate.
int dispatch(const RunConfig& cfg, std::ostream& log);

/// parse_and_validate + dispatch with errors mapped to exit codes.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// "log:a:b:n", "lin:a:b:n" or a comma list.
std::vector<double> parse_grid(const std::string& text);

const char* version();

}  // namespace steklov::cli
