#include "dprobe/error.hpp"
#include "dprobe/solver.hpp"

#include <json.hpp>

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>

namespace dprobe {

namespace {

std::uint64_t to_little(std::uint64_t v)
{
    if constexpr (std::endian::native == std::endian::big) {
        return __builtin_bswap64(v);
    }
    return v;
}

} // namespace

void write_snapshot(const SpaceTimeField& field, const std::string& stem, const std::string& extra_json)
{
    const Grid& g = field.grid();
    {
        std::ofstream out(stem + ".f64", std::ios::binary);
        if (!out) {
            throw std::runtime_error("write_snapshot: cannot open " + stem + ".f64");
        }
        std::vector<std::uint64_t> buf(field.data().size());
        for (std::size_t i = 0; i < buf.size(); ++i) {
            buf[i] = to_little(std::bit_cast<std::uint64_t>(field.data()[i]));
        }
        out.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size() * 8));
    }
    nlohmann::ordered_json j;
    j["format"] = "dprobe-field";
    j["version"] = 1;
    j["dtype"] = "float64";
    j["byte_order"] = "little";
    j["layout"] = "level-major, then z, y, x (x fastest)";
    j["grid"] = {{"lo", {g.box.lo.x, g.box.lo.y, g.box.lo.z}},
                 {"hi", {g.box.hi.x, g.box.hi.y, g.box.hi.z}},
                 {"n", g.n},
                 {"nodes_per_axis", g.N()},
                 {"steps", g.steps},
                 {"t_end", g.t_end}};
    j["levels"] = g.levels();
    j["values"] = field.data().size();
    j["meta"] = nlohmann::ordered_json::parse(extra_json);
    std::ofstream side(stem + ".json");
    side << j.dump(2) << '\n';
}

SpaceTimeField read_snapshot(const std::string& stem, std::string* sidecar)
{
    std::ifstream side(stem + ".json");
    if (!side) {
        throw std::runtime_error("read_snapshot: cannot open " + stem + ".json");
    }
    std::stringstream ss;
    ss << side.rdbuf();
    const auto j = nlohmann::json::parse(ss.str());
    if (j.at("format") != "dprobe-field" || j.at("dtype") != "float64" || j.at("byte_order") != "little") {
        throw ShapeError("read_snapshot: unsupported sidecar format");
    }
    const auto& gj = j.at("grid");
    Box box{{gj["lo"][0], gj["lo"][1], gj["lo"][2]}, {gj["hi"][0], gj["hi"][1], gj["hi"][2]}};
    const Grid g = Grid::make(box, gj["n"].get<int>(), gj["t_end"].get<double>(), gj["steps"].get<int>());
    SpaceTimeField f(g);
    std::ifstream in(stem + ".f64", std::ios::binary);
    if (!in) {
        throw std::runtime_error("read_snapshot: cannot open " + stem + ".f64");
    }
    std::vector<std::uint64_t> buf(f.data().size());
    in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size() * 8));
    if (in.gcount() != static_cast<std::streamsize>(buf.size() * 8) || in.peek() != EOF) {
        throw ShapeError("read_snapshot: payload size does not match the sidecar grid");
    }
    for (std::size_t i = 0; i < buf.size(); ++i) {
        f.data()[i] = std::bit_cast<double>(to_little(buf[i]));
    }
    if (sidecar) {
        *sidecar = ss.str();
    }
    return f;
}

} // namespace dprobe
