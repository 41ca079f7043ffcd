#pragma once

#include <cstddef>
#include <string>
#include <utility>
#include <vector>

namespace tm2d {

struct NamedTensor {
    std::string name;
    std::vector<std::size_t> shape;
    std::vector<double> data;
};

// On-disk layout:
//   TM2DCKPT v1
//   hparams <n>
//   key=value            (n lines)
//   tensors <m>
//   <name> <rank> <extent>...\n<little-endian float64 payload>   (m times)
class Checkpoint {
public:
    void set(const std::string& key, const std::string& value);
    void set(const std::string& key, double value);
    void set(const std::string& key, long long value);
    void set(const std::string& key, int value) { set(key, static_cast<long long>(value)); }
    void set(const std::string& key, std::size_t value) { set(key, static_cast<long long>(value)); }

    bool has(const std::string& key) const;
    const std::string& get(const std::string& key) const;
    double get_double(const std::string& key) const;
    long long get_int(const std::string& key) const;

    void add_tensor(std::string name, std::vector<std::size_t> shape, std::vector<double> data);
    bool has_tensor(const std::string& name) const;
    const NamedTensor& tensor(const std::string& name) const;

    const std::vector<std::pair<std::string, std::string>>& hparams() const { return hparams_; }
    const std::vector<NamedTensor>& tensors() const { return tensors_; }

private:
    std::vector<std::pair<std::string, std::string>> hparams_;
    std::vector<NamedTensor> tensors_;
};

void save_checkpoint(const std::string& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace tm2d
