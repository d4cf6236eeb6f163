#include "config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"

#include "flexstage/errors.hpp"

namespace flexbench {

using flexstage::ConfigError;
using json = nlohmann::ordered_json;

namespace {

const char* const kFamilies[] = {"xg", "xd", "zg", "zd"};
const char* const kAxes[] = {"x", "y", "z"};

// Walks one JSON object, recording which keys were read so leftovers can be rejected.
class Reader {
public:
    Reader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
        if (!j_.is_object()) throw ConfigError(path_.empty() ? "$" : path_, "expected an object");
    }

    std::string at(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

    bool has(const std::string& key) const { return j_.contains(key); }

    const json& get(const std::string& key) {
        auto it = j_.find(key);
        if (it == j_.end()) throw ConfigError(at(key), "missing required field");
        seen_.insert(key);
        return *it;
    }

    double num(const std::string& key) {
        const json& v = get(key);
        if (!v.is_number()) throw ConfigError(at(key), "expected a number");
        return v.get<double>();
    }

    double positive(const std::string& key) {
        double v = num(key);
        if (!(v > 0)) throw ConfigError(at(key), "must be positive");
        return v;
    }

    double nonnegative(const std::string& key) {
        double v = num(key);
        if (!(v >= 0)) throw ConfigError(at(key), "must be non-negative");
        return v;
    }

    long integer(const std::string& key) {
        const json& v = get(key);
        if (!v.is_number_integer()) throw ConfigError(at(key), "expected an integer");
        return v.get<long>();
    }

    std::uint64_t u64(const std::string& key) {
        const json& v = get(key);
        if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<long long>() >= 0))
            throw ConfigError(at(key), "expected a non-negative integer");
        return v.get<std::uint64_t>();
    }

    bool boolean(const std::string& key) {
        const json& v = get(key);
        if (!v.is_boolean()) throw ConfigError(at(key), "expected true or false");
        return v.get<bool>();
    }

    std::string str(const std::string& key) {
        const json& v = get(key);
        if (!v.is_string()) throw ConfigError(at(key), "expected a string");
        return v.get<std::string>();
    }

    template <std::size_t N>
    std::array<double, N> numbers(const std::string& key) {
        const json& v = get(key);
        if (!v.is_array() || v.size() != N)
            throw ConfigError(at(key), "expected an array of " + std::to_string(N) + " numbers");
        std::array<double, N> out{};
        for (std::size_t i = 0; i < N; ++i) {
            if (!v[i].is_number()) throw ConfigError(at(key) + "[" + std::to_string(i) + "]", "expected a number");
            out[i] = v[i].get<double>();
        }
        return out;
    }

    Reader obj(const std::string& key) { return Reader(get(key), at(key)); }

    void finish() const {
        for (auto it = j_.begin(); it != j_.end(); ++it)
            if (!seen_.count(it.key())) throw ConfigError(at(it.key()), "unknown field");
    }

private:
    const json& j_;
    std::string path_;
    std::set<std::string> seen_;
};

template <class F>
void checked(const std::string& path, F&& f) {
    try {
        f();
    } catch (const ConfigError&) {
        throw;
    } catch (const std::exception& e) {
        throw ConfigError(path, e.what());
    }
}

flexstage::McpfParams read_family(Reader r) {
    flexstage::McpfParams p;
    p.thickness = r.positive("thickness_mm") * 1e-3;
    p.length = r.positive("length_mm") * 1e-3;
    p.width = r.positive("width_mm") * 1e-3;
    if (r.has("layer_count")) {
        long n = r.integer("layer_count");
        if (n < 1 || n > 16) throw ConfigError(r.at("layer_count"), "must be within 1..16");
        p.layer_count = static_cast<int>(n);
    }
    if (r.has("rigid_link_span_mm")) p.rigid_link_span = r.nonnegative("rigid_link_span_mm") * 1e-3;
    if (r.has("load_offset_ratio")) p.load_offset_ratio = r.num("load_offset_ratio");
    if (r.has("mirrored")) p.mirrored = r.boolean("mirrored");
    r.finish();
    return p;
}

AxisBounds read_bounds(Reader r) {
    AxisBounds b{r.numbers<4>("lower_mm"), r.numbers<4>("upper_mm")};
    for (int i = 0; i < 4; ++i)
        if (!(b.lower[i] < b.upper[i]))
            throw ConfigError(r.at("upper_mm") + "[" + std::to_string(i) + "]", "upper bound must exceed lower bound");
    r.finish();
    return b;
}

template <class E>
E read_enum(Reader& r, const std::string& key, std::initializer_list<std::pair<const char*, E>> options) {
    std::string s = r.str(key);
    std::string names;
    for (auto& [name, value] : options) {
        if (s == name) return value;
        names += names.empty() ? name : std::string(", ") + name;
    }
    throw ConfigError(r.at(key), "expected one of: " + names);
}

template <class E>
const char* enum_name(E v, std::initializer_list<std::pair<const char*, E>> options) {
    for (auto& [name, value] : options)
        if (v == value) return name;
    return "";
}

const std::initializer_list<std::pair<const char*, flexstage::IntegralForm>> kIntegralForms = {
    {"sampled_integral", flexstage::IntegralForm::SampledIntegral},
    {"as_printed", flexstage::IntegralForm::AsPrinted}};
const std::initializer_list<std::pair<const char*, flexstage::FeedforwardHold>> kHolds = {
    {"first_order", flexstage::FeedforwardHold::FirstOrder},
    {"zero_order", flexstage::FeedforwardHold::ZeroOrder}};
const std::initializer_list<std::pair<const char*, FeedforwardSource>> kSources = {
    {"plant", FeedforwardSource::Plant}, {"stage", FeedforwardSource::Stage}, {"none", FeedforwardSource::None}};

json arr(const std::array<double, 3>& a) { return json::array({a[0], a[1], a[2]}); }
json arr(const flexstage::DesignVector& a) { return json::array({a[0], a[1], a[2], a[3]}); }

}  // namespace

std::array<flexstage::Plant2, 3> SimulationConfig::plants() const {
    std::array<flexstage::Plant2, 3> p;
    for (int i = 0; i < 3; ++i) p[i] = flexstage::plant_from_tf(gain[i], a1[i], a0[i]);
    return p;
}

WorkbenchConfig default_config() {
    WorkbenchConfig c;
    auto fam = [](double t, double l, double b, double span, double ratio) {
        flexstage::McpfParams p;
        p.thickness = t * 1e-3;
        p.length = l * 1e-3;
        p.width = b * 1e-3;
        p.rigid_link_span = span * 1e-3;
        p.load_offset_ratio = ratio;
        return p;
    };
    // Spans and offsets fitted to the reference stiffness table (see calibrate_axis).
    c.stage.families["xd"] = fam(0.40, 30.5, 12, 0.644527602, -0.571885021);
    c.stage.families["xg"] = fam(0.32, 23.0, 8, 0.460809567, -0.571885021);
    c.stage.families["zd"] = fam(0.34, 22.4, 6, 0.167902314, 0.222110643);
    c.stage.families["zg"] = fam(0.40, 41.7, 6, 0.829831574, 0.222110643);
    return c;
}

WorkbenchConfig parse_config(const std::string& text) {
    json root;
    try {
        root = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError("$", std::string("invalid JSON: ") + e.what());
    }
    Reader r(root, "");
    WorkbenchConfig c;

    long version = r.integer("schema_version");
    if (version != kSchemaVersion)
        throw ConfigError("schema_version", "unsupported version " + std::to_string(version) + " (expected " +
                                                std::to_string(kSchemaVersion) + ")");

    {
        Reader m = r.obj("material");
        c.material.youngs_modulus = m.positive("youngs_modulus_GPa") * 1e9;
        c.material.shear_modulus = m.positive("shear_modulus_GPa") * 1e9;
        c.material.shear_factor = m.positive("shear_factor");
        c.material.density = m.positive("density_kg_per_m3");
        m.finish();
        checked("material", [&] { c.material.validate(); });
    }

    {
        Reader f = r.obj("families");
        for (const char* name : kFamilies) {
            flexstage::McpfParams p = read_family(f.obj(name));
            checked(f.at(name), [&] { p.validate(); });
            c.stage.families[name] = p;
        }
        f.finish();
    }

    {
        Reader s = r.obj("stage");
        c.stage.masses = s.numbers<3>("masses_kg");
        c.stage.damping = s.numbers<3>("damping_N_s_per_m");
        c.stage.chain_masses = s.numbers<5>("chain_masses_kg");
        c.stage.c5 = s.positive("c5");
        c.stage.c8 = s.positive("c8");
        s.finish();
        checked("stage", [&] { c.stage.validate(); });
    }

    {
        Reader o = r.obj("optimizer");
        OptimizerConfig& oc = c.optimizer;
        oc.max_force_n = o.positive("max_force_N");
        oc.stroke_mm = o.positive("stroke_mm");
        {
            Reader e = o.obj("eta_min");
            for (const char* name : kFamilies) oc.eta_min[name] = e.nonnegative(name);
            e.finish();
        }
        oc.min_thickness_mm = o.positive("min_thickness_mm");
        {
            Reader b = o.obj("bounds");
            oc.xy = read_bounds(b.obj("xy"));
            oc.z = read_bounds(b.obj("z"));
            b.finish();
        }
        {
            Reader g = o.obj("ga");
            long pop = g.integer("population");
            long gen = g.integer("generations");
            if (pop < 0 || pop > 100000) throw ConfigError(g.at("population"), "out of range");
            if (gen < 0 || gen > 100000) throw ConfigError(g.at("generations"), "out of range");
            oc.ga.population = static_cast<int>(pop);
            oc.ga.generations = static_cast<int>(gen);
            oc.ga.mutation_probability = g.num("mutation_probability");
            oc.ga.crossover_probability = g.num("crossover_probability");
            oc.ga.eta_crossover = g.num("eta_crossover");
            oc.ga.eta_mutation = g.num("eta_mutation");
            oc.ga.seed = g.u64("seed");
            g.finish();
            checked(o.at("ga"), [&] { oc.ga.validate(); });
        }
        oc.selection_slack = o.nonnegative("selection_slack");
        o.finish();
    }

    {
        Reader s = r.obj("simulation");
        SimulationConfig& sc = c.simulation;
        sc.sample_time_s = s.positive("sample_time_s");
        {
            Reader p = s.obj("plants");
            for (int i = 0; i < 3; ++i) {
                Reader a = p.obj(kAxes[i]);
                sc.gain[i] = a.positive("gain_mm_per_N_s2");
                sc.a1[i] = a.nonnegative("a1_per_s");
                sc.a0[i] = a.positive("a0_per_s2");
                a.finish();
            }
            p.finish();
        }
        {
            Reader k = s.obj("controller");
            sc.kp = k.nonnegative("kp_N_per_mm");
            sc.ki = k.nonnegative("ki");
            sc.kd = k.nonnegative("kd");
            sc.filter_n = k.positive("filter_n");
            sc.integral_form = read_enum(k, "integral_form", kIntegralForms);
            sc.hold = read_enum(k, "feedforward_hold", kHolds);
            sc.feedforward = read_enum(k, "feedforward", kSources);
            k.finish();
        }
        {
            Reader p = s.obj("paths");
            sc.circle_diameter_mm = p.positive("circle_diameter_mm");
            sc.circle_frequency_hz = p.positive("circle_frequency_Hz");
            sc.raster_width_mm = p.positive("raster_width_mm");
            sc.raster_frequency_hz = p.positive("raster_frequency_Hz");
            sc.raster_duration_s = p.positive("raster_duration_s");
            sc.duration_periods = p.positive("duration_periods");
            if (sc.duration_periods <= 1.0)
                throw ConfigError(p.at("duration_periods"), "must exceed the one-period transient window");
            p.finish();
        }
        s.finish();
    }

    {
        Reader d = r.obj("discrepancy");
        c.discrepancy.k_nominal = d.numbers<3>("k_nominal_N_per_m");
        c.discrepancy.k_actual = d.numbers<3>("k_actual_N_per_m");
        c.discrepancy.f_nominal_hz = d.numbers<3>("f_nominal_Hz");
        for (int i = 0; i < 3; ++i)
            if (!(c.discrepancy.k_nominal[i] > 0 && c.discrepancy.k_actual[i] > 0 && c.discrepancy.f_nominal_hz[i] > 0))
                throw ConfigError("discrepancy", "values must be positive");
        c.discrepancy.coupling_max_um = d.numbers<3>("coupling_max_um");
        c.discrepancy.coupling_min_um = d.numbers<3>("coupling_min_um");
        c.discrepancy.scan_range_mm = d.positive("scan_range_mm");
        d.finish();
    }

    r.finish();
    return c;
}

WorkbenchConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("$", "cannot open config file " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

std::string config_to_json(const WorkbenchConfig& c) {
    json j;
    j["schema_version"] = c.schema_version;
    j["material"] = {{"youngs_modulus_GPa", c.material.youngs_modulus / 1e9},
                     {"shear_modulus_GPa", c.material.shear_modulus / 1e9},
                     {"shear_factor", c.material.shear_factor},
                     {"density_kg_per_m3", c.material.density}};
    json fams = json::object();
    for (const char* name : kFamilies) {
        const auto& p = c.stage.families.at(name);
        fams[name] = {{"thickness_mm", p.thickness * 1e3},
                      {"length_mm", p.length * 1e3},
                      {"width_mm", p.width * 1e3},
                      {"layer_count", p.layer_count},
                      {"rigid_link_span_mm", p.rigid_link_span * 1e3},
                      {"load_offset_ratio", p.load_offset_ratio},
                      {"mirrored", p.mirrored}};
    }
    j["families"] = fams;
    const auto& cm = c.stage.chain_masses;
    j["stage"] = {{"masses_kg", arr(c.stage.masses)},
                  {"damping_N_s_per_m", arr(c.stage.damping)},
                  {"chain_masses_kg", json::array({cm[0], cm[1], cm[2], cm[3], cm[4]})},
                  {"c5", c.stage.c5},
                  {"c8", c.stage.c8}};
    const OptimizerConfig& o = c.optimizer;
    json eta = json::object();
    for (const char* name : kFamilies) eta[name] = o.eta_min.at(name);
    j["optimizer"] = {
        {"max_force_N", o.max_force_n},
        {"stroke_mm", o.stroke_mm},
        {"eta_min", eta},
        {"min_thickness_mm", o.min_thickness_mm},
        {"bounds",
         {{"xy", {{"lower_mm", arr(o.xy.lower)}, {"upper_mm", arr(o.xy.upper)}}},
          {"z", {{"lower_mm", arr(o.z.lower)}, {"upper_mm", arr(o.z.upper)}}}}},
        {"ga",
         {{"population", o.ga.population},
          {"generations", o.ga.generations},
          {"mutation_probability", o.ga.mutation_probability},
          {"crossover_probability", o.ga.crossover_probability},
          {"eta_crossover", o.ga.eta_crossover},
          {"eta_mutation", o.ga.eta_mutation},
          {"seed", o.ga.seed}}},
        {"selection_slack", o.selection_slack}};
    const SimulationConfig& s = c.simulation;
    json plants = json::object();
    for (int i = 0; i < 3; ++i)
        plants[kAxes[i]] = {{"gain_mm_per_N_s2", s.gain[i]}, {"a1_per_s", s.a1[i]}, {"a0_per_s2", s.a0[i]}};
    j["simulation"] = {{"sample_time_s", s.sample_time_s},
                       {"plants", plants},
                       {"controller",
                        {{"kp_N_per_mm", s.kp},
                         {"ki", s.ki},
                         {"kd", s.kd},
                         {"filter_n", s.filter_n},
                         {"integral_form", enum_name(s.integral_form, kIntegralForms)},
                         {"feedforward_hold", enum_name(s.hold, kHolds)},
                         {"feedforward", enum_name(s.feedforward, kSources)}}},
                       {"paths",
                        {{"circle_diameter_mm", s.circle_diameter_mm},
                         {"circle_frequency_Hz", s.circle_frequency_hz},
                         {"raster_width_mm", s.raster_width_mm},
                         {"raster_frequency_Hz", s.raster_frequency_hz},
                         {"raster_duration_s", s.raster_duration_s},
                         {"duration_periods", s.duration_periods}}}};
    j["discrepancy"] = {{"k_nominal_N_per_m", arr(c.discrepancy.k_nominal)},
                        {"k_actual_N_per_m", arr(c.discrepancy.k_actual)},
                        {"f_nominal_Hz", arr(c.discrepancy.f_nominal_hz)},
                        {"coupling_max_um", arr(c.discrepancy.coupling_max_um)},
                        {"coupling_min_um", arr(c.discrepancy.coupling_min_um)},
                        {"scan_range_mm", c.discrepancy.scan_range_mm}};
    return j.dump(2) + "\n";
}

flexstage::FamilyGeometry family_geometry(const flexstage::McpfParams& p) {
    flexstage::FamilyGeometry g;
    g.width_mm = p.width * 1e3;
    g.span_mm = p.rigid_link_span * 1e3;
    g.load_offset_ratio = p.load_offset_ratio;
    g.layer_count = p.layer_count;
    return g;
}

flexstage::OptProblem make_problem(const WorkbenchConfig& c, flexstage::Axis axis) {
    flexstage::OptProblem p;
    p.axis = axis;
    const bool xy = axis == flexstage::Axis::XY;
    const char* g = xy ? "xg" : "zg";
    const char* d = xy ? "xd" : "zd";
    const AxisBounds& b = xy ? c.optimizer.xy : c.optimizer.z;
    p.lower = b.lower;
    p.upper = b.upper;
    p.guider = family_geometry(c.stage.families.at(g));
    p.decoupler = family_geometry(c.stage.families.at(d));
    p.material = c.material;
    p.max_force_n = c.optimizer.max_force_n;
    p.stroke_mm = c.optimizer.stroke_mm;
    p.eta_decoupler_min = c.optimizer.eta_min.at(d);
    p.eta_guider_min = c.optimizer.eta_min.at(g);
    p.min_thickness_mm = c.optimizer.min_thickness_mm;
    p.validate();
    return p;
}

}  // namespace flexbench
