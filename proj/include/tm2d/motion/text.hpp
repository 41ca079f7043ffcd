#pragma once

#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "tm2d/motion/motion.hpp"

namespace tm2d::motion {

// word -> id table. Ids 0 and 1 are reserved for PAD and UNK.
class Vocabulary {
public:
    Vocabulary() = default;
    explicit Vocabulary(std::map<std::string, int> table);

    // Closed vocabulary covering every word of the action-description templates.
    static const Vocabulary& builtin();

    int lookup(std::string_view word) const;
    // Number of ids including PAD and UNK.
    std::size_t size() const;

private:
    std::map<std::string, int, std::less<>> table_;
    int max_id_ = kUnkId;
};

// Lowercases, splits on anything that is not a letter or digit, maps words
// through the vocabulary and pads/truncates to kMaxTextLength.
TextTokens tokenize_text(std::string_view text, const Vocabulary& vocab);

}  // namespace tm2d::motion
