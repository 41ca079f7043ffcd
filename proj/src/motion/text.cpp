#include "tm2d/motion/text.hpp"

#include <algorithm>
#include <cctype>
#include <set>

#include "tm2d/common/errors.hpp"

namespace tm2d::motion {

namespace {

std::vector<std::string> split_words(std::string_view text) {
    std::vector<std::string> words;
    std::string cur;
    for (char ch : text) {
        const auto c = static_cast<unsigned char>(ch);
        if (std::isalnum(c)) {
            cur.push_back(static_cast<char>(std::tolower(c)));
        } else if (!cur.empty()) {
            words.push_back(std::move(cur));
            cur.clear();
        }
    }
    if (!cur.empty()) {
        words.push_back(std::move(cur));
    }
    return words;
}

// Words of the synthetic action descriptions plus a few generic extras.
constexpr const char* kWords[] = {
    "a",      "an",     "the",      "person", "someone", "man",     "woman",  "jumps",  "jump",    "hops",
    "up",     "down",   "and",      "in",     "place",   "high",    "into",   "air",    "spins",   "spin",
    "turns",  "around", "circle",   "slowly", "quickly", "walks",   "walk",   "forward", "back",   "forth",
    "waves",  "wave",   "raises",   "hand",   "arm",     "hello",   "with",   "left",   "right",   "crouches",
    "crouch", "squats", "stands",   "bends",  "knees",   "kicks",   "kick",   "leg",    "foot",    "does",
    "then",   "while",  "dances",   "dance",  "moves",   "body",    "head",   "twice",  "again",   "steps",
};

}  // namespace

Vocabulary::Vocabulary(std::map<std::string, int> table) {
    for (auto& [word, id] : table) {
        if (id <= kUnkId) {
            throw ConfigError("vocabulary id " + std::to_string(id) + " for '" + word + "' collides with PAD/UNK");
        }
        max_id_ = std::max(max_id_, id);
        table_.emplace(word, id);
    }
}

const Vocabulary& Vocabulary::builtin() {
    static const Vocabulary vocab = [] {
        std::set<std::string> sorted(std::begin(kWords), std::end(kWords));
        std::map<std::string, int> table;
        int next = kUnkId + 1;
        for (const auto& w : sorted) {
            table.emplace(w, next++);
        }
        return Vocabulary(std::move(table));
    }();
    return vocab;
}

int Vocabulary::lookup(std::string_view word) const {
    const auto it = table_.find(word);
    return it == table_.end() ? kUnkId : it->second;
}

std::size_t Vocabulary::size() const { return static_cast<std::size_t>(max_id_) + 1; }

TextTokens tokenize_text(std::string_view text, const Vocabulary& vocab) {
    TextTokens out;
    out.ids.assign(kMaxTextLength, kPadId);
    const auto words = split_words(text);
    out.length = std::min(words.size(), kMaxTextLength);
    for (std::size_t i = 0; i < out.length; ++i) {
        out.ids[i] = vocab.lookup(words[i]);
    }
    return out;
}

}  // namespace tm2d::motion
