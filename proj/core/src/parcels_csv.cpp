#include "canopy/io.hpp"

#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace canopy {

namespace {
const std::string kParcelsHeader =
    "parcel_id,center_x,center_y,radius_m,tree_id,dx_m,dy_m,species";
}

std::vector<Parcel> load_parcels(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in)
        throw IoError("cannot open " + path.string());

    std::string line;
    if (!std::getline(in, line))
        throw ParseError(path.string() + ": empty file (expected header \"" + kParcelsHeader + "\")");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != kParcelsHeader)
        throw ParseError(path.string() + ":1: bad header, expected \"" + kParcelsHeader + "\"");

    std::vector<Parcel> parcels;
    std::map<std::string, size_t> index_of; // parcel_id -> position in parcels
    std::map<std::string, std::set<std::string>> tree_ids;

    size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto at = [&](const std::string& msg) {
            return path.string() + ":" + std::to_string(line_no) + ": " + msg;
        };
        const auto fields = split_csv_line(line);
        if (fields.size() != 8)
            throw ParseError(at("expected 8 fields, got " + std::to_string(fields.size())));

        const std::string& parcel_id = fields[0];
        if (parcel_id.empty())
            throw ParseError(at("empty parcel_id"));
        const double cx = parse_double(fields[1], at("center_x"));
        const double cy = parse_double(fields[2], at("center_y"));
        const double radius = parse_double(fields[3], at("radius_m"));
        const std::string& tree_id = fields[4];
        const double dx = parse_double(fields[5], at("dx_m"));
        const double dy = parse_double(fields[6], at("dy_m"));
        const std::string& species = fields[7];

        if (!(radius > 0.0))
            throw InvariantViolation(at("radius_m must be positive, got " + fields[3]));
        if (tree_id.empty())
            throw ParseError(at("empty tree_id"));
        if (species.empty())
            throw InvariantViolation(at("empty species for tree " + tree_id));
        const double off = std::hypot(dx, dy);
        if (off > radius) {
            std::ostringstream os;
            os << "tree " << tree_id << " offset " << off << " m exceeds radius " << radius << " m";
            throw InvariantViolation(at(os.str()));
        }

        auto it = index_of.find(parcel_id);
        if (it == index_of.end()) {
            Parcel p;
            p.parcel_id = parcel_id;
            p.center = {cx, cy};
            p.radius = radius;
            index_of.emplace(parcel_id, parcels.size());
            parcels.push_back(std::move(p));
            it = index_of.find(parcel_id);
        } else {
            const Parcel& p = parcels[it->second];
            if (p.center.x != cx || p.center.y != cy || p.radius != radius)
                throw ParseError(at("parcel " + parcel_id +
                                    " center/radius differ from its earlier rows"));
        }
        if (!tree_ids[parcel_id].insert(tree_id).second)
            throw InvariantViolation(at("duplicate tree_id " + tree_id + " in parcel " + parcel_id));
        parcels[it->second].trees.push_back({tree_id, dx, dy, species});
    }

    for (const auto& p : parcels)
        p.validate();
    return parcels;
}

void save_parcels(const std::vector<Parcel>& parcels, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out)
        throw IoError("cannot write " + path.string());
    out << kParcelsHeader << "\n";
    for (const auto& p : parcels) {
        p.validate();
        for (const auto& t : p.trees) {
            out << p.parcel_id << ',' << format_double(p.center.x) << ','
                << format_double(p.center.y) << ',' << format_double(p.radius) << ','
                << t.tree_id << ',' << format_double(t.dx) << ',' << format_double(t.dy) << ','
                << t.species << "\n";
        }
    }
    if (!out)
        throw IoError("write failed for " + path.string());
}

} // namespace canopy
