#include "brann/schema.hpp"

#include <algorithm>
#include <map>

#include "brann/errors.hpp"

namespace brann {

std::string_view to_string(Statistic stat) {
    switch (stat) {
        case Statistic::min: return "min";
        case Statistic::max: return "max";
        case Statistic::mean: return "mean";
    }
    return "?";
}

std::string feature_name(const Channel& channel, Statistic stat) {
    return channel.name + "_" + std::string(to_string(stat));
}

std::vector<std::string> FeatureSchema::feature_names() const {
    std::vector<std::string> out;
    for (const auto& p : process_params) out.push_back(p.name);
    for (const auto& c : channels) {
        for (auto s : stats) out.push_back(feature_name(c, s));
    }
    return out;
}

std::vector<std::string> FeatureSchema::feature_units() const {
    std::vector<std::string> out;
    for (const auto& p : process_params) out.push_back(p.units);
    for (const auto& c : channels) {
        for (std::size_t i = 0; i < stats.size(); ++i) out.push_back(c.units);
    }
    return out;
}

std::size_t FeatureSchema::feature_count() const {
    return process_params.size() + channels.size() * stats.size();
}

std::vector<std::string> FeatureSchema::input_parameters() const {
    std::vector<std::string> out;
    for (const auto& p : process_params) out.push_back(p.name);
    for (const auto& c : channels) out.push_back(c.name);
    return out;
}

std::vector<std::string> FeatureSchema::csv_header(bool with_targets) const {
    std::vector<std::string> out{"case_id", "cut_index"};
    for (auto& f : feature_names()) out.push_back(std::move(f));
    if (with_targets) out.insert(out.end(), targets.begin(), targets.end());
    return out;
}

namespace {

// NASA Ames milling: process information plus six monitoring channels.
FeatureSchema nasa_schema() {
    FeatureSchema s;
    s.name = "nasa";
    s.process_params = {{"doc", "mm", "depth of cut"}, {"feed", "mm/rev", "feed rate"}};
    s.channels = {
        {"smcac", "A", "AC spindle motor current"},
        {"smcdc", "A", "DC spindle motor current"},
        {"vib_table", "V", "table vibration"},
        {"vib_spindle", "V", "spindle vibration"},
        {"ae_table", "V", "acoustic emission at table"},
        {"ae_spindle", "V", "acoustic emission at spindle"},
    };
    return s;
}

// 2010 PHM data challenge: force, vibration and AE-RMS; wear of three flutes.
FeatureSchema phm_schema() {
    FeatureSchema s;
    s.name = "phm2010";
    s.channels = {
        {"force_x", "N", "force in X"},         {"force_y", "N", "force in Y"},
        {"force_z", "N", "force in Z"},         {"vibration_x", "g", "vibration in X"},
        {"vibration_y", "g", "vibration in Y"}, {"vibration_z", "g", "vibration in Z"},
        {"ae_rms", "V", "acoustic emission RMS"},
    };
    s.targets = {"vb_flute1", "vb_flute2", "vb_flute3"};
    return s;
}

// NUAA Ideahouse: force/moment, two vibration channels, spindle power and
// current; wear of four edges.
FeatureSchema nuaa_schema() {
    FeatureSchema s;
    s.name = "nuaa";
    s.channels = {
        {"axial_force", "N", "axial force"},
        {"bending_moment_x", "N.m", "bending moment about X"},
        {"bending_moment_y", "N.m", "bending moment about Y"},
        {"torsion_z", "N.m", "torsion about Z"},
        {"vibration_ch1", "g", "vibration channel 1"},
        {"vibration_ch2", "g", "vibration channel 2"},
        {"spindle_power", "W", "spindle power"},
        {"spindle_current", "A", "spindle current"},
    };
    s.targets = {"vb_edge1", "vb_edge2", "vb_edge3", "vb_edge4"};
    return s;
}

// In-house Ti6Al4V end milling: three force components and AE, one value per
// input parameter so it lines up with the union schema.
FeatureSchema inhouse_schema() {
    FeatureSchema s;
    s.name = "inhouse";
    s.channels = {
        {"force_x", "N", "force in X"},
        {"force_y", "N", "force in Y"},
        {"force_z", "N", "force in Z"},
        {"ae_rms", "V", "acoustic emission RMS"},
    };
    s.stats = {Statistic::mean};
    return s;
}

// Union of the nasa, phm2010 and nuaa input parameters (one mean feature per
// channel, process parameters as-is) predicting a single maximum wear value.
FeatureSchema union_schema() {
    FeatureSchema s;
    s.name = "union";
    s.stats = {Statistic::mean};
    std::map<std::string, std::string> units;
    for (const auto& part : {nasa_schema(), phm_schema(), nuaa_schema()}) {
        for (const auto& p : part.process_params) {
            if (units.emplace(p.name, p.units).second) s.process_params.push_back(p);
        }
        for (const auto& c : part.channels) {
            const auto [it, fresh] = units.emplace(c.name, c.units);
            if (!fresh && it->second != c.units) throw SchemaError("conflicting units for " + c.name);
            if (fresh) s.channels.push_back(c);
        }
    }
    return s;
}

}  // namespace

FeatureSchema schema_by_name(std::string_view name) {
    if (name == "nasa") return nasa_schema();
    if (name == "phm2010") return phm_schema();
    if (name == "nuaa") return nuaa_schema();
    if (name == "inhouse") return inhouse_schema();
    if (name == "union") return union_schema();
    throw SchemaError("unknown schema '" + std::string(name) + "'");
}

std::vector<std::string> schema_names() { return {"nasa", "phm2010", "nuaa", "inhouse", "union"}; }

}  // namespace brann
