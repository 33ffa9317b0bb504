#include <cstring>
#include <fstream>
#include <map>

#include "canopy/io.hpp"
#include "canopy/propagation.hpp"

namespace canopy::propagation {

namespace {

constexpr char kMagic[4] = {'E', 'M', 'B', '1'};

EmbeddingTable load_embeddings_text(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in)
        throw IoError("cannot open " + path.string());
    std::string line;
    if (!std::getline(in, line))
        throw ParseError(path.string() + ": empty embeddings file");
    if (!line.empty() && line.back() == '\r') line.pop_back();

    // Header: id,dim=<D>,label
    const auto head = split_csv_line(line);
    if (head.size() != 3 || head[0] != "id" || head[2] != "label" ||
        head[1].rfind("dim=", 0) != 0)
        throw ParseError(path.string() + ":1: expected header \"id,dim=<D>,label\"");
    EmbeddingTable table;
    table.dim = static_cast<int>(parse_double(head[1].substr(4), path.string() + ": dim"));
    if (table.dim < 1)
        throw ParseError(path.string() + ":1: dim must be >= 1");

    size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto at = [&](const std::string& msg) {
            return path.string() + ":" + std::to_string(line_no) + ": " + msg;
        };
        const auto fields = split_csv_line(line);
        if (fields.size() != static_cast<size_t>(table.dim) + 2)
            throw ParseError(at("expected " + std::to_string(table.dim + 2) + " fields, got " +
                                std::to_string(fields.size())));
        if (fields[0].empty())
            throw ParseError(at("empty id"));
        table.ids.push_back(fields[0]);
        for (int d = 0; d < table.dim; ++d)
            table.vectors.push_back(
                static_cast<float>(parse_double(fields[1 + d], at("component"))));
        const std::string& label = fields.back();
        table.labels.push_back(label == "-" ? std::string() : label);
    }
    table.normalize_and_validate();
    return table;
}

// Binary layout, little-endian throughout:
//   "EMB1"  u32 n  u32 dim
//   n records: u16 id_len, id bytes, u16 label_len (0 = unlabeled),
//              label bytes, dim float32 components.
EmbeddingTable load_embeddings_binary(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw IoError("cannot open " + path.string());
    char magic[4];
    in.read(magic, 4);
    if (!in || std::memcmp(magic, kMagic, 4) != 0)
        throw ParseError(path.string() + ": missing EMB1 magic");

    auto read_u32 = [&]() {
        uint32_t v;
        in.read(reinterpret_cast<char*>(&v), 4);
        if (!in) throw ParseError(path.string() + ": truncated embeddings file");
        return v;
    };
    auto read_u16 = [&]() {
        uint16_t v;
        in.read(reinterpret_cast<char*>(&v), 2);
        if (!in) throw ParseError(path.string() + ": truncated embeddings file");
        return v;
    };

    EmbeddingTable table;
    const uint32_t n = read_u32();
    table.dim = static_cast<int>(read_u32());
    if (table.dim < 1)
        throw ParseError(path.string() + ": dim must be >= 1");
    table.vectors.reserve(static_cast<size_t>(n) * table.dim);
    std::string buf;
    for (uint32_t i = 0; i < n; ++i) {
        buf.resize(read_u16());
        in.read(buf.data(), static_cast<std::streamsize>(buf.size()));
        table.ids.push_back(buf);
        buf.resize(read_u16());
        in.read(buf.data(), static_cast<std::streamsize>(buf.size()));
        table.labels.push_back(buf);
        const size_t base = table.vectors.size();
        table.vectors.resize(base + table.dim);
        in.read(reinterpret_cast<char*>(table.vectors.data() + base),
                static_cast<std::streamsize>(table.dim) * 4);
        if (!in) throw ParseError(path.string() + ": truncated embeddings file");
    }
    table.normalize_and_validate();
    return table;
}

} // namespace

EmbeddingTable load_embeddings(const std::filesystem::path& path) {
    std::ifstream probe(path, std::ios::binary);
    if (!probe)
        throw IoError("cannot open " + path.string());
    char magic[4] = {0, 0, 0, 0};
    probe.read(magic, 4);
    probe.close();
    if (std::memcmp(magic, kMagic, 4) == 0) return load_embeddings_binary(path);
    return load_embeddings_text(path);
}

void save_embeddings_text(const EmbeddingTable& emb, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out)
        throw IoError("cannot write " + path.string());
    out << "id,dim=" << emb.dim << ",label\n";
    for (size_t i = 0; i < emb.size(); ++i) {
        out << emb.ids[i];
        const float* v = emb.vec(i);
        for (int d = 0; d < emb.dim; ++d) out << ',' << format_double(v[d]);
        out << ',' << (emb.labels[i].empty() ? "-" : emb.labels[i]) << "\n";
    }
    if (!out)
        throw IoError("write failed for " + path.string());
}

void save_embeddings_binary(const EmbeddingTable& emb, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw IoError("cannot write " + path.string());
    out.write(kMagic, 4);
    const uint32_t n = static_cast<uint32_t>(emb.size());
    const uint32_t dim = static_cast<uint32_t>(emb.dim);
    out.write(reinterpret_cast<const char*>(&n), 4);
    out.write(reinterpret_cast<const char*>(&dim), 4);
    for (size_t i = 0; i < emb.size(); ++i) {
        const uint16_t id_len = static_cast<uint16_t>(emb.ids[i].size());
        out.write(reinterpret_cast<const char*>(&id_len), 2);
        out.write(emb.ids[i].data(), id_len);
        const uint16_t label_len = static_cast<uint16_t>(emb.labels[i].size());
        out.write(reinterpret_cast<const char*>(&label_len), 2);
        out.write(emb.labels[i].data(), label_len);
        out.write(reinterpret_cast<const char*>(emb.vec(i)),
                  static_cast<std::streamsize>(emb.dim) * 4);
    }
    if (!out)
        throw IoError("write failed for " + path.string());
}

void save_pseudo_labels(const PseudoLabelSet& set, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out)
        throw IoError("cannot write " + path.string());
    out << "id,species,certainty,class_weight\n";
    for (const auto& e : set.entries)
        out << e.id << ',' << e.species << ',' << format_double(e.certainty) << ','
            << format_double(e.class_weight) << "\n";
    if (!out)
        throw IoError("write failed for " + path.string());
}

PseudoLabelSet load_pseudo_labels(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in)
        throw IoError("cannot open " + path.string());
    std::string line;
    if (!std::getline(in, line))
        throw ParseError(path.string() + ": empty pseudo-label file");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != "id,species,certainty,class_weight")
        throw ParseError(path.string() + ":1: bad header, expected "
                         "\"id,species,certainty,class_weight\"");
    PseudoLabelSet set;
    std::map<std::string, double> class_weights;
    size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto at = [&](const std::string& msg) {
            return path.string() + ":" + std::to_string(line_no) + ": " + msg;
        };
        const auto fields = split_csv_line(line);
        if (fields.size() != 4)
            throw ParseError(at("expected 4 fields, got " + std::to_string(fields.size())));
        PseudoLabel e;
        e.id = fields[0];
        e.species = fields[1];
        if (e.id.empty() || e.species.empty())
            throw ParseError(at("empty id or species"));
        e.certainty = parse_double(fields[2], at("certainty"));
        e.class_weight = parse_double(fields[3], at("class_weight"));
        if (!(e.certainty >= 0.0 && e.certainty <= 1.0))
            throw InvariantViolation(at("certainty outside [0,1]"));
        class_weights[e.species] = e.class_weight;
        set.entries.push_back(std::move(e));
    }
    set.class_weights.assign(class_weights.begin(), class_weights.end());
    return set;
}

} // namespace canopy::propagation
