#include "report.hpp"

#include <sstream>

#include "json.hpp"

#include "commands.hpp"
#include "internal.hpp"

namespace flexbench {

using json = nlohmann::ordered_json;

namespace {

std::string join(const std::vector<std::string>& v) {
    std::string s;
    for (const auto& x : v) s += (s.empty() ? "" : ", ") + x;
    return s;
}

json load(const std::filesystem::path& dir, const std::string& name) { return json::parse(read_text(dir / name)); }

std::string num(const json& v, const char* spec) { return v.is_number() ? fmt(spec, v.get<double>()) : "n/a"; }

std::string yes_no(const json& v) { return v.is_boolean() && v.get<bool>() ? "yes" : "no"; }

// Length keys carry the unit the run was written in.
std::string length_key(const json& obj, const std::string& stem) {
    for (const char* u : {"_mm", "_m"})
        if (obj.contains(stem + u)) return stem + u;
    return stem + "_mm";
}

std::string design_row(const std::string& label, const json& d) {
    std::ostringstream s;
    s << "| " << label;
    for (const char* stem : {"t_g", "l_g", "t_d", "l_d"}) s << " | " << num(d.value(length_key(d, stem), json()), "%.4g");
    s << " | " << num(d["k_axis_N_per_m"], "%.1f") << " | " << num(d["eta_d"], "%.2f") << " | "
      << num(d["eta_g"], "%.2f") << " | " << yes_no(d["feasible"]) << " |\n";
    return s.str();
}

}  // namespace

MissingArtifacts::MissingArtifacts(std::vector<std::string> names)
    : std::runtime_error("missing artifacts: " + join(names)), names_(std::move(names)) {}

const std::vector<std::string>& report_artifacts() {
    static const std::vector<std::string> names = {
        "stiffness.json",         "sweep_flags.json",        "selected_xy.json",          "selected_z.json",
        "modal.json",             "verify.json",             "metrics_circle-xy.json",    "metrics_circle-yz.json",
        "metrics_circle-xz.json", "metrics_crown.json"};
    return names;
}

std::string build_report(const std::filesystem::path& dir) {
    std::vector<std::string> missing;
    for (const auto& n : report_artifacts())
        if (!std::filesystem::is_regular_file(dir / n)) missing.push_back(n);
    if (!missing.empty()) throw MissingArtifacts(missing);

    const json st = load(dir, "stiffness.json");
    const json sw = load(dir, "sweep_flags.json");
    const json sel_xy = load(dir, "selected_xy.json");
    const json sel_z = load(dir, "selected_z.json");
    const json modal = load(dir, "modal.json");
    const json ver = load(dir, "verify.json");

    std::ostringstream r;
    r << "# Flexure stage workbench report\n\n";

    r << "## 1. Stiffness model\n\n";
    r << "| Family | t | l | b | k_motional (N/m) | k_lateral (N/m) | eta |\n";
    r << "|---|---|---|---|---|---|---|\n";
    const std::string u = st["units"].value("length", "mm");
    for (const auto& f : st["families"]) {
        r << "| " << f["family"].get<std::string>() << " | " << num(f[length_key(f, "thickness")], "%.4g") << " "
          << u << " | " << num(f[length_key(f, "length")], "%.4g") << " " << u << " | "
          << num(f[length_key(f, "width")], "%.4g") << " " << u << " | " << num(f["k_motional_N_per_m"], "%.1f")
          << " | " << num(f["k_lateral_N_per_m"], "%.1f") << " | " << num(f["eta"], "%.2f") << " |\n";
    }
    r << "\nAxis summary (lumped model with actuator mass):\n\n";
    r << "| Axis | eta_d | eta_g | k_axis (N/m) | f w/o VCM (Hz) | f w/ VCM (Hz) |\n";
    r << "|---|---|---|---|---|---|\n";
    for (const char* a : {"xy", "z"}) {
        const json& ax = st["axes"][a];
        r << "| " << (std::string(a) == "xy" ? "x/y" : "z") << " | " << num(ax["eta_decoupler"], "%.2f") << " | "
          << num(ax["eta_guider"], "%.2f") << " | " << num(ax["k_axis_N_per_m"], "%.1f") << " | n/a | "
          << num(ax["natural_frequency_Hz"], "%.1f") << " |\n";
    }
    r << "\nBeam-FE cross-check (relative stiffness error):\n\n";
    r << "| Family | motional | lateral | reactions (motional) | reactions (lateral) |\n";
    r << "|---|---|---|---|---|\n";
    for (const auto& f : ver["fe_oracle"])
        r << "| " << f["family"].get<std::string>() << " | " << num(f["rel_error_motional"], "%.2e") << " | "
          << num(f["rel_error_lateral"], "%.2e") << " | " << num(f["reaction_rel_error_motional"], "%.2e") << " | "
          << num(f["reaction_rel_error_lateral"], "%.2e") << " |\n";

    r << "\n## 2. Parameter sweep\n\n";
    r << "Base family " << sw.value("base_family", "?") << ", " << sw.value("points", 0) << " grid points.\n\n";
    r << "| Trend | Holds |\n|---|---|\n";
    r << "| k_motional increasing in t | " << yes_no(sw["k_motional_increasing_in_t"]) << " |\n";
    r << "| k_motional decreasing in l | " << yes_no(sw["k_motional_decreasing_in_l"]) << " |\n";
    r << "| eta increasing in b | " << yes_no(sw["eta_increasing_in_b"]) << " |\n";

    r << "\n## 3. Design optimization\n\n";
    r << "| Design | t_g | l_g | t_d | l_d | k_axis (N/m) | eta_d | eta_g | feasible |\n";
    r << "|---|---|---|---|---|---|---|---|---|\n";
    for (const json* s : {&sel_xy, &sel_z}) {
        const std::string ax = (*s)["axis"].get<std::string>();
        if ((*s).value("feasible_front", false))
            r << design_row(ax + " selected", (*s)["selected"]);
        else
            r << "| " << ax << " selected | no feasible design | | | | | | | no |\n";
        r << design_row(ax + " reference", (*s)["reference_design"]);
    }

    r << "\n## 4. Dynamics and identification\n\n";
    r << "| Axis | lumped model (Hz) | plant (Hz) | plant DC stiffness (N/m) | alpha | thickness error (%) | corrected f (Hz) | "
         "coupling rate (%) |\n";
    r << "|---|---|---|---|---|---|---|---|\n";
    const char* axes[] = {"x", "y", "z"};
    for (int i = 0; i < 3; ++i) {
        const json& p = ver["plants"][axes[i]];
        const json& d = ver["discrepancy"][axes[i]];
        r << "| " << axes[i] << " | " << num(modal["lumped_model"]["natural_frequency_Hz"][i], "%.2f") << " | "
          << num(p["natural_frequency_Hz"], "%.2f") << " | " << num(p["dc_stiffness_N_per_m"], "%.1f") << " | "
          << num(d["alpha"], "%.3f") << " | " << num(d["thickness_error_percent"], "%.1f") << " | "
          << num(d["corrected_frequency_Hz"], "%.1f") << " | " << num(ver["coupling_rate_percent"][axes[i]], "%.2f")
          << " |\n";
    }
    r << "\nBranch-chain modes:\n\n";
    for (const char* c : {"xy", "z"}) {
        const json& ch = modal["chains"][c];
        std::vector<std::string> f;
        for (const auto& v : ch["modes_Hz"]) f.push_back(fmt("%.2f", v.get<double>()));
        r << "- " << c << " chain: " << join(f) << " Hz; transmission loss " << num(ch["transmission_loss"], "%.3e")
          << "; port leakage " << num(ch["port_leakage"], "%.3e") << "\n";
    }
    r << "\nClosed-loop spectral radius:\n\n";
    r << "| Axis | sampled integral | as printed |\n|---|---|---|\n";
    for (const char* a : axes) {
        const json& cl = ver["closed_loop"][a];
        r << "| " << a << " | " << num(cl["sampled_integral"]["spectral_radius"], "%.5f")
          << (cl["sampled_integral"]["stable"].get<bool>() ? "" : " (unstable)") << " | "
          << num(cl["as_printed"]["spectral_radius"], "%.5f") << (cl["as_printed"]["stable"].get<bool>() ? "" : " (unstable)")
          << " |\n";
    }

    r << "\n## 5. Path tracking\n\n";
    r << "| Path | MAXE x (um) | MAXE y (um) | MAXE z (um) | RMSE x (um) | RMSE y (um) | RMSE z (um) |\n";
    r << "|---|---|---|---|---|---|---|\n";
    for (const char* p : {"circle-xy", "circle-yz", "circle-xz", "crown"}) {
        const json m = load(dir, std::string("metrics_") + p + ".json");
        r << "| " << p;
        for (const char* key : {"MAXE_um", "RMSE_um"})
            for (const char* a : axes) r << " | " << (m[key].contains(a) ? num(m[key][a], "%.4f") : "-");
        r << " |\n";
    }
    return r.str();
}

}  // namespace flexbench
