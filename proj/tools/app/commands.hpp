#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "config.hpp"

namespace flexbench {

enum ExitCode : int { kOk = 0, kConfigError = 2, kNumericalError = 3, kInfeasible = 4 };

struct RunContext {
    WorkbenchConfig cfg;
    std::filesystem::path out_dir = "out";
    bool si_units = false;  // lengths in m instead of mm
    std::ostream* log = nullptr;

    double len(double metres) const { return si_units ? metres : metres * 1e3; }
    double len_from_mm(double mm) const { return si_units ? mm * 1e-3 : mm; }
    std::string len_unit() const { return si_units ? "m" : "mm"; }
    std::ostream& out() const;
};

struct StiffnessOptions {
    std::string family = "all";  // xg, xd, zg, zd or all
    bool verify = false;
    int fe_elements = 8;
};

struct SweepOptions {
    std::string family = "xd";  // base family: layer count, span, offset
    std::vector<double> t_mm{0.30, 0.35, 0.40};
    std::vector<double> l_mm{20, 30, 40};
    std::vector<double> b_mm{6, 9, 12};
    bool cabinet = false;
};

struct OptimizeOptions {
    std::string axis = "xy";  // xy or z
    bool timing = false;       // wall time goes into the metadata only when asked
};

struct ModalOptions {
    double f_min_hz = 0.1;
    double f_max_hz = 100;
    int points = 200;
    bool identify = false;  // swept-sine identification of each plant
};

struct SimulateOptions {
    std::string path = "circle-xy";  // circle-xy, circle-yz, circle-xz, crown, raster
    double duration_s = 0;           // 0: from config
};

int cmd_stiffness(const RunContext& ctx, const StiffnessOptions& o);
int cmd_sweep(const RunContext& ctx, const SweepOptions& o);
int cmd_optimize(const RunContext& ctx, const OptimizeOptions& o);
int cmd_modal(const RunContext& ctx, const ModalOptions& o);
int cmd_simulate(const RunContext& ctx, const SimulateOptions& o);
int cmd_verify(const RunContext& ctx);

// Full argv front end; never throws, returns the exit code.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

void write_text(const std::filesystem::path& p, const std::string& text);
std::string read_text(const std::filesystem::path& p);

}  // namespace flexbench
