#include <fstream>
#include <sstream>

#include <json.hpp>

#include "phaseless/medium.hpp"

namespace phaseless {

using nlohmann::json;

RefractiveMedium phantom_from_json_text(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("phantom: ") + e.what());
    }
    try {
        const double B = j.value("radius", 1.0);
        std::vector<PhantomComponent> comps;
        for (const auto& jc : j.value("components", json::array())) {
            PhantomComponent c;
            c.shape = shape_from_string(jc.at("shape").get<std::string>());
            const auto ctr = jc.at("center").get<std::vector<double>>();
            if (ctr.size() != 3) throw ConfigError("phantom: center must have three coordinates");
            c.center = Vec3(ctr[0], ctr[1], ctr[2]);
            c.scale = jc.at("scale").get<double>();
            c.amplitude = jc.at("amplitude").get<double>();
            c.cutoff = jc.value("cutoff", 0.0);
            comps.push_back(c);
        }
        return RefractiveMedium(B, std::move(comps));
    } catch (const json::exception& e) {
        throw ConfigError(std::string("phantom: ") + e.what());
    } catch (const PreconditionError& e) {
        throw ConfigError(std::string("phantom: ") + e.what());
    }
}

RefractiveMedium load_phantom(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("phantom: cannot open '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return phantom_from_json_text(ss.str());
}

std::string phantom_to_json_text(const RefractiveMedium& medium) {
    json j;
    j["radius"] = medium.B();
    j["components"] = json::array();
    for (const auto& c : medium.components()) {
        json jc;
        jc["shape"] = to_string(c.shape);
        jc["center"] = {c.center.x(), c.center.y(), c.center.z()};
        jc["scale"] = c.scale;
        jc["amplitude"] = c.amplitude;
        if (c.shape == Shape::gaussian_bump) jc["cutoff"] = c.cutoff;
        j["components"].push_back(jc);
    }
    return j.dump(2);
}

}  // namespace phaseless
