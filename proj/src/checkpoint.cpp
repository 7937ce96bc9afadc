#include "mmn/checkpoint.hpp"

#include <cstring>
#include <fstream>

#include <json.hpp>

#include "mmn/errors.hpp"

namespace mmn {

namespace {

constexpr const char* kMagic = "MMN-CKPT\n";

void append_le32(std::string& out, const float* data, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) {
        std::uint32_t u;
        std::memcpy(&u, &data[i], 4);
        out.push_back(static_cast<char>(u & 0xff));
        out.push_back(static_cast<char>((u >> 8) & 0xff));
        out.push_back(static_cast<char>((u >> 16) & 0xff));
        out.push_back(static_cast<char>((u >> 24) & 0xff));
    }
}

void read_le32(const std::string& in, std::size_t pos, float* data, std::size_t n) {
    if (pos + 4 * n > in.size()) throw IoError("checkpoint: truncated data section");
    for (std::size_t i = 0; i < n; ++i) {
        const auto* p = reinterpret_cast<const unsigned char*>(in.data() + pos + 4 * i);
        std::uint32_t u = static_cast<std::uint32_t>(p[0]) |
                          (static_cast<std::uint32_t>(p[1]) << 8) |
                          (static_cast<std::uint32_t>(p[2]) << 16) |
                          (static_cast<std::uint32_t>(p[3]) << 24);
        std::memcpy(&data[i], &u, 4);
    }
}

struct TensorEntry {
    std::string name;
    std::vector<std::size_t> shape;
    const float* data;
    std::size_t count;
};

std::vector<TensorEntry> tensor_table(const Network<float>& net) {
    std::vector<TensorEntry> table;
    for (std::size_t l = 0; l < net.num_linear(); ++l) {
        const auto& w = net.weight(l);
        table.push_back({"linear" + std::to_string(l) + ".weight", {w.rows(), w.cols()},
                         w.data(), w.size()});
        const auto& b = net.bias(l);
        table.push_back({"linear" + std::to_string(l) + ".bias", {b.size()}, b.data(), b.size()});
    }
    for (std::size_t l = 0; l < net.num_bn(); ++l) {
        const std::string p = "bn" + std::to_string(l) + ".";
        const auto& sc = net.bn_scale(l);
        const auto& sh = net.bn_shift(l);
        const auto& rm = net.bn_running_mean(l);
        const auto& rv = net.bn_running_var(l);
        table.push_back({p + "scale", {sc.size()}, sc.data(), sc.size()});
        table.push_back({p + "shift", {sh.size()}, sh.data(), sh.size()});
        table.push_back({p + "running_mean", {rm.size()}, rm.data(), rm.size()});
        table.push_back({p + "running_var", {rv.size()}, rv.data(), rv.size()});
    }
    return table;
}

}  // namespace

std::string serialize_network(const Network<float>& net) {
    const auto table = tensor_table(net);

    nlohmann::json header;
    header["spec"] = {{"input_dim", net.spec().input_dim},
                      {"output_dim", net.spec().output_dim},
                      {"hidden_layers", net.spec().hidden_layers},
                      {"use_batch_norm", net.spec().use_batch_norm}};
    nlohmann::json tensors = nlohmann::json::array();
    std::size_t offset = 0;
    for (const auto& t : table) {
        tensors.push_back({{"name", t.name}, {"shape", t.shape}, {"offset", offset}});
        offset += 4 * t.count;
    }
    header["tensors"] = tensors;

    std::string out = kMagic;
    out += header.dump();
    out += '\n';
    for (const auto& t : table) append_le32(out, t.data, t.count);
    return out;
}

Network<float> deserialize_network(const std::string& bytes) {
    const std::size_t magic_len = std::strlen(kMagic);
    if (bytes.size() < magic_len || bytes.compare(0, magic_len, kMagic) != 0)
        throw IoError("checkpoint: bad magic");
    const std::size_t header_end = bytes.find('\n', magic_len);
    if (header_end == std::string::npos) throw IoError("checkpoint: missing header line");

    nlohmann::json header;
    try {
        header = nlohmann::json::parse(bytes.substr(magic_len, header_end - magic_len));
    } catch (const nlohmann::json::exception& e) {
        throw IoError(std::string("checkpoint: malformed header: ") + e.what());
    }

    NetworkSpec spec;
    try {
        const auto& s = header.at("spec");
        spec.input_dim = s.at("input_dim").get<int>();
        spec.output_dim = s.at("output_dim").get<int>();
        spec.hidden_layers = s.at("hidden_layers").get<std::vector<int>>();
        spec.use_batch_norm = s.at("use_batch_norm").get<bool>();
    } catch (const nlohmann::json::exception& e) {
        throw IoError(std::string("checkpoint: incomplete spec: ") + e.what());
    }

    Network<float> net(spec, 0);
    const auto table = tensor_table(net);
    const auto& tensors = header.at("tensors");
    if (tensors.size() != table.size())
        throw IoError("checkpoint: tensor table does not match spec");

    const std::size_t data_start = header_end + 1;
    // tensor_table() points into `net`; const_cast writes back into the same
    // storage the table describes.
    for (std::size_t i = 0; i < table.size(); ++i) {
        const auto& meta = tensors.at(i);
        if (meta.at("name").get<std::string>() != table[i].name)
            throw IoError("checkpoint: unexpected tensor " + meta.at("name").get<std::string>());
        std::size_t count = 1;
        for (const auto& d : meta.at("shape")) count *= d.get<std::size_t>();
        if (count != table[i].count)
            throw IoError("checkpoint: shape mismatch for " + table[i].name);
        const std::size_t off = meta.at("offset").get<std::size_t>();
        read_le32(bytes, data_start + off, const_cast<float*>(table[i].data), count);
    }
    return net;
}

void save_checkpoint(const Network<float>& net, const std::string& path) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw IoError("cannot open checkpoint for writing: " + path);
    const std::string bytes = serialize_network(net);
    f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!f) throw IoError("checkpoint write failed: " + path);
}

Network<float> load_checkpoint(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open checkpoint: " + path);
    std::string bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
    return deserialize_network(bytes);
}

std::uint64_t checkpoint_hash(const Network<float>& net) {
    return fnv1a(serialize_network(net));
}

}  // namespace mmn
