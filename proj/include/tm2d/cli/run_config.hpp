#pragma once

#include <map>
#include <string>
#include <vector>

#include "tm2d/fusion/generate.hpp"
#include "tm2d/vqvae/train.hpp"
#include "tm2d/xmodal/train.hpp"

namespace tm2d::cli {

// Flat key=value document. Every known key has a default; unknown keys and
// values of the wrong type are rejected with ConfigError.
class RunConfig {
public:
    static RunConfig defaults();

    void set(const std::string& key, const std::string& value);
    // One "key=value" per line; blank lines and '#' comments are skipped.
    void merge_text(const std::string& text, const std::string& origin = "config");
    void merge_file(const std::string& path);
    // "key=value" override as given on the command line.
    void apply_override(const std::string& assignment);

    bool has(const std::string& key) const { return entries_.count(key) > 0; }
    const std::string& get(const std::string& key) const;
    long long get_int(const std::string& key) const;
    std::size_t get_size(const std::string& key) const;
    double get_double(const std::string& key) const;

    // Fully resolved document, keys sorted.
    std::string format() const;

    vq::VqVaeConfig vq_model() const;
    vq::VqTrainConfig vq_train() const;
    xm::XmConfig xm_model(std::size_t codebook_size) const;
    xm::XmTrainConfig xm_train() const;
    fusion::FusionSchedule fusion_schedule(double start, double duration) const;

private:
    enum class Kind { kInt, kDouble, kString };
    struct Entry {
        Kind kind;
        std::string value;
    };
    void declare(const std::string& key, Kind kind, const std::string& value);

    std::map<std::string, Entry> entries_;
};

}  // namespace tm2d::cli
