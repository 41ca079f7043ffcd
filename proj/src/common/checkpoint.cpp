#include "tm2d/common/checkpoint.hpp"

#include <algorithm>
#include <bit>
#include <cstdint>
#include <filesystem>
#include <fstream>

#include "tm2d/common/errors.hpp"
#include "tm2d/common/textio.hpp"

namespace tm2d {

namespace {

constexpr const char* kMagic = "TM2DCKPT v1";

void put_le(std::string& buf, double v) {
    auto bits = std::bit_cast<std::uint64_t>(v);
    for (int i = 0; i < 8; ++i) {
        buf.push_back(static_cast<char>(bits & 0xffu));
        bits >>= 8u;
    }
}

double get_le(const unsigned char* p) {
    std::uint64_t bits = 0;
    for (int i = 7; i >= 0; --i) {
        bits = (bits << 8u) | p[i];
    }
    return std::bit_cast<double>(bits);
}

std::string next_line(std::istream& in, const std::string& path) {
    std::string line;
    if (!std::getline(in, line)) {
        throw FormatError("truncated checkpoint '" + path + "'");
    }
    return line;
}

}  // namespace

void Checkpoint::set(const std::string& key, const std::string& value) {
    if (key.empty() || key.find_first_of("=\n") != std::string::npos || value.find('\n') != std::string::npos) {
        throw ContractError("checkpoint: invalid hyperparameter '" + key + "'");
    }
    for (auto& [k, v] : hparams_) {
        if (k == key) {
            v = value;
            return;
        }
    }
    hparams_.emplace_back(key, value);
}

void Checkpoint::set(const std::string& key, double value) { set(key, format_double(value)); }

void Checkpoint::set(const std::string& key, long long value) { set(key, std::to_string(value)); }

bool Checkpoint::has(const std::string& key) const {
    return std::any_of(hparams_.begin(), hparams_.end(), [&](const auto& kv) { return kv.first == key; });
}

const std::string& Checkpoint::get(const std::string& key) const {
    for (const auto& [k, v] : hparams_) {
        if (k == key) {
            return v;
        }
    }
    throw FormatError("checkpoint is missing hyperparameter '" + key + "'");
}

double Checkpoint::get_double(const std::string& key) const { return parse_double(get(key)); }

long long Checkpoint::get_int(const std::string& key) const { return parse_int(get(key)); }

void Checkpoint::add_tensor(std::string name, std::vector<std::size_t> shape, std::vector<double> data) {
    if (name.empty() || name.find_first_of(" \n") != std::string::npos) {
        throw ContractError("checkpoint: invalid tensor name '" + name + "'");
    }
    std::size_t n = 1;
    for (auto e : shape) {
        n *= e;
    }
    if (shape.empty() || n != data.size()) {
        throw ShapeError("checkpoint: tensor '" + name + "' extents do not match its data");
    }
    for (auto& t : tensors_) {
        if (t.name == name) {
            t.shape = std::move(shape);
            t.data = std::move(data);
            return;
        }
    }
    tensors_.push_back({std::move(name), std::move(shape), std::move(data)});
}

bool Checkpoint::has_tensor(const std::string& name) const {
    return std::any_of(tensors_.begin(), tensors_.end(), [&](const auto& t) { return t.name == name; });
}

const NamedTensor& Checkpoint::tensor(const std::string& name) const {
    for (const auto& t : tensors_) {
        if (t.name == name) {
            return t;
        }
    }
    throw FormatError("checkpoint is missing tensor '" + name + "'");
}

void save_checkpoint(const std::string& path, const Checkpoint& ckpt) {
    std::string buf = std::string(kMagic) + "\n";
    buf += "hparams " + std::to_string(ckpt.hparams().size()) + "\n";
    for (const auto& [k, v] : ckpt.hparams()) {
        buf += k + "=" + v + "\n";
    }
    buf += "tensors " + std::to_string(ckpt.tensors().size()) + "\n";
    for (const auto& t : ckpt.tensors()) {
        buf += t.name + " " + std::to_string(t.shape.size());
        for (auto e : t.shape) {
            buf += " " + std::to_string(e);
        }
        buf += "\n";
        for (double v : t.data) {
            put_le(buf, v);
        }
    }
    write_file(path, buf);
}

Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error("cannot open checkpoint '" + path + "'");
    }
    const std::string magic = next_line(in, path);
    if (magic != kMagic) {
        throw FormatError("'" + path + "' is not a " + kMagic + " checkpoint (header '" + magic.substr(0, 32) + "')");
    }
    Checkpoint ckpt;
    auto head = split_ws(next_line(in, path));
    if (head.size() != 2 || head[0] != "hparams") {
        throw FormatError("checkpoint '" + path + "': expected hparams block");
    }
    const auto nh = parse_int(head[1]);
    for (long long i = 0; i < nh; ++i) {
        const std::string line = next_line(in, path);
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw FormatError("checkpoint '" + path + "': malformed hyperparameter line");
        }
        ckpt.set(line.substr(0, eq), line.substr(eq + 1));
    }
    head = split_ws(next_line(in, path));
    if (head.size() != 2 || head[0] != "tensors") {
        throw FormatError("checkpoint '" + path + "': expected tensors block");
    }
    const auto nt = parse_int(head[1]);
    std::vector<unsigned char> raw;
    for (long long i = 0; i < nt; ++i) {
        const auto fields = split_ws(next_line(in, path));
        if (fields.size() < 2) {
            throw FormatError("checkpoint '" + path + "': malformed tensor header");
        }
        const auto rank = static_cast<std::size_t>(parse_int(fields[1]));
        if (fields.size() != rank + 2) {
            throw FormatError("checkpoint '" + path + "': tensor '" + fields[0] + "' rank mismatch");
        }
        std::vector<std::size_t> shape;
        std::size_t n = 1;
        for (std::size_t r = 0; r < rank; ++r) {
            shape.push_back(static_cast<std::size_t>(parse_int(fields[2 + r])));
            n *= shape.back();
        }
        raw.resize(n * 8);
        in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
        if (static_cast<std::size_t>(in.gcount()) != raw.size()) {
            throw FormatError("checkpoint '" + path + "': truncated payload for '" + fields[0] + "'");
        }
        std::vector<double> data(n);
        for (std::size_t k = 0; k < n; ++k) {
            data[k] = get_le(raw.data() + 8 * k);
        }
        ckpt.add_tensor(fields[0], std::move(shape), std::move(data));
    }
    return ckpt;
}

}  // namespace tm2d
