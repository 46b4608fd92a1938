#include "freeconv/json_io.hpp"

#include <fstream>
#include <stdexcept>

namespace freeconv {

using nlohmann::json;

Measure measure_from_json(const json& j)
{
    if (!j.is_object() || !j.contains("type") || !j["type"].is_string())
        throw std::invalid_argument("measure JSON: missing \"type\" field");
    std::string type = j["type"].get<std::string>();
    if (type == "atoms") {
        if (!j.contains("points") || !j["points"].is_array())
            throw std::invalid_argument("measure JSON: atoms need a \"points\" array");
        std::vector<Atom> pts;
        for (const json& p : j["points"])
            pts.push_back({p.at("x").get<double>(), p.at("w").get<double>()});
        return Measure::atoms(std::move(pts));
    }
    if (type == "semicircle")
        return Measure::semicircle(j.at("w2").get<double>());
    if (type == "arcsine")
        return Measure::arcsine(j.at("a").get<double>());
    if (type == "grid") {
        std::vector<double> xs = j.at("xs").get<std::vector<double>>();
        std::vector<double> ps = j.at("ps").get<std::vector<double>>();
        return Measure::grid_density(std::move(xs), std::move(ps));
    }
    throw std::invalid_argument("measure JSON: unknown type \"" + type + "\"");
}

json measure_to_json(const Measure& m)
{
    json j;
    switch (m.kind()) {
    case Measure::Kind::Atoms: {
        j["type"] = "atoms";
        j["points"] = json::array();
        for (const Atom& a : m.atoms_list())
            j["points"].push_back({{"x", a.position}, {"w", a.mass}});
        break;
    }
    case Measure::Kind::Semicircle:
        j["type"] = "semicircle";
        j["w2"] = m.semicircle_w2();
        break;
    case Measure::Kind::Arcsine:
        j["type"] = "arcsine";
        j["a"] = m.arcsine_a();
        break;
    case Measure::Kind::GridDensity:
        j["type"] = "grid";
        j["xs"] = m.grid_xs();
        j["ps"] = m.grid_ps();
        break;
    }
    return j;
}

Measure load_measure(const std::string& path)
{
    std::ifstream in(path);
    if (!in)
        throw std::invalid_argument("cannot open measure file: " + path);
    json j;
    try {
        j = json::parse(in);
    } catch (const json::parse_error& e) {
        throw std::invalid_argument("malformed JSON in " + path + " at byte " +
                                    std::to_string(e.byte) + ": " + e.what());
    }
    try {
        return measure_from_json(j);
    } catch (const json::exception& e) {
        throw std::invalid_argument("invalid measure in " + path + ": " + e.what());
    }
}

void save_measure(const Measure& m, const std::string& path)
{
    std::ofstream out(path);
    if (!out)
        throw std::invalid_argument("cannot open output file: " + path);
    out << measure_to_json(m).dump(2) << "\n";
}

} // namespace freeconv
