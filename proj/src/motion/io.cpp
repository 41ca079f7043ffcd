#include "tm2d/motion/io.hpp"

#include <filesystem>
#include <sstream>

#include "tm2d/common/errors.hpp"
#include "tm2d/common/textio.hpp"

namespace tm2d::motion {

namespace fs = std::filesystem;

namespace {

std::vector<std::string> lines_of(const std::string& text) {
    std::vector<std::string> lines;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') {
            line.pop_back();
        }
        lines.push_back(std::move(line));
    }
    return lines;
}

void append_rows(std::string& out, const std::vector<double>& data, std::size_t rows, std::size_t cols) {
    for (std::size_t t = 0; t < rows; ++t) {
        for (std::size_t c = 0; c < cols; ++c) {
            if (c > 0) {
                out += ' ';
            }
            out += format_double(data[t * cols + c]);
        }
        out += '\n';
    }
}

std::vector<double> parse_rows(const std::vector<std::string>& lines, std::size_t first, std::size_t rows,
                               std::size_t cols, const std::string& origin) {
    if (lines.size() < first + rows) {
        throw FormatError(origin + ": expected " + std::to_string(rows) + " data rows");
    }
    std::vector<double> data;
    data.reserve(rows * cols);
    for (std::size_t t = 0; t < rows; ++t) {
        const auto fields = split_ws(lines[first + t]);
        if (fields.size() != cols) {
            throw FormatError(origin + ": row " + std::to_string(t) + " has " + std::to_string(fields.size()) +
                              " values, expected " + std::to_string(cols));
        }
        for (const auto& f : fields) {
            data.push_back(parse_double(f));
        }
    }
    return data;
}

std::string field_value(const std::string& field, const std::string& key, const std::string& origin) {
    if (field.rfind(key + "=", 0) != 0) {
        throw FormatError(origin + ": expected field '" + key + "=' in manifest record");
    }
    return field.substr(key.size() + 1);
}

}  // namespace

std::string format_motion(const MotionSequence& m) {
    m.validate();
    std::string out = "TMOT v1 " + std::to_string(m.frames) + " " + std::to_string(m.width) + " " +
                      format_double(m.fps) + "\n";
    append_rows(out, m.data, m.frames, m.width);
    return out;
}

MotionSequence parse_motion(const std::string& text, const std::string& origin) {
    const auto lines = lines_of(text);
    if (lines.empty()) {
        throw FormatError(origin + ": empty motion file");
    }
    const auto head = split_ws(lines[0]);
    if (head.size() != 5 || head[0] != "TMOT" || head[1] != "v1") {
        throw FormatError(origin + ": missing 'TMOT v1 T d_m fps' header");
    }
    MotionSequence m;
    m.frames = static_cast<std::size_t>(parse_int(head[2]));
    m.width = static_cast<std::size_t>(parse_int(head[3]));
    m.fps = parse_double(head[4]);
    m.data = parse_rows(lines, 1, m.frames, m.width, origin);
    m.validate();
    return m;
}

void write_motion(const std::string& path, const MotionSequence& m) { write_file(path, format_motion(m)); }

MotionSequence read_motion(const std::string& path) { return parse_motion(read_file(path), path); }

std::string format_audio(const AudioFeatureSeq& a) {
    std::string out = "TAUD v1 " + std::to_string(a.frames) + " " + std::to_string(a.dims) + " " +
                      format_double(a.rate) + "\nBEATS";
    for (double b : a.beat_times) {
        out += " " + format_double(b);
    }
    out += "\n";
    append_rows(out, a.data, a.frames, a.dims);
    return out;
}

AudioFeatureSeq parse_audio(const std::string& text, const std::string& origin) {
    const auto lines = lines_of(text);
    if (lines.size() < 2) {
        throw FormatError(origin + ": truncated audio file");
    }
    const auto head = split_ws(lines[0]);
    if (head.size() != 5 || head[0] != "TAUD" || head[1] != "v1") {
        throw FormatError(origin + ": missing 'TAUD v1 T d_a rate' header");
    }
    AudioFeatureSeq a;
    a.frames = static_cast<std::size_t>(parse_int(head[2]));
    a.dims = static_cast<std::size_t>(parse_int(head[3]));
    a.rate = parse_double(head[4]);
    const auto beats = split_ws(lines[1]);
    if (beats.empty() || beats[0] != "BEATS") {
        throw FormatError(origin + ": missing BEATS line");
    }
    for (std::size_t i = 1; i < beats.size(); ++i) {
        a.beat_times.push_back(parse_double(beats[i]));
    }
    a.data = parse_rows(lines, 2, a.frames, a.dims, origin);
    return a;
}

void write_audio(const std::string& path, const AudioFeatureSeq& a) { write_file(path, format_audio(a)); }

AudioFeatureSeq read_audio(const std::string& path) { return parse_audio(read_file(path), path); }

void write_corpus(const std::string& dir, const Corpus& corpus, const std::string& manifest_name) {
    corpus.validate();
    const std::string kind = to_string(corpus.provenance);
    std::string manifest = "TM2DMAN v1 " + kind + " " + std::to_string(corpus.items.size()) + "\n";
    for (std::size_t i = 0; i < corpus.items.size(); ++i) {
        const auto& item = corpus.items[i];
        char stem[32];
        std::snprintf(stem, sizeof(stem), "%s_%05zu", kind.c_str(), i);
        const std::string motion_rel = std::string("motion/") + stem + ".tmot";
        write_motion((fs::path(dir) / motion_rel).string(), item.motion);
        std::string audio_rel = "-";
        if (item.audio) {
            audio_rel = std::string("audio/") + stem + ".taud";
            write_audio((fs::path(dir) / audio_rel).string(), *item.audio);
        }
        std::string text = item.text.value_or("-");
        if (text.find_first_of("\t\n") != std::string::npos) {
            throw ContractError("text descriptions may not contain tabs or newlines");
        }
        manifest += "motion=" + motion_rel + "\taudio=" + audio_rel + "\ttext=" + text + "\tlabel=" + item.label + "\n";
    }
    write_file((fs::path(dir) / manifest_name).string(), manifest);
}

Corpus read_corpus(const std::string& manifest_path) {
    const auto lines = lines_of(read_file(manifest_path));
    if (lines.empty()) {
        throw FormatError(manifest_path + ": empty manifest");
    }
    const auto head = split_ws(lines[0]);
    if (head.size() != 4 || head[0] != "TM2DMAN" || head[1] != "v1") {
        throw FormatError(manifest_path + ": missing 'TM2DMAN v1 kind n' header");
    }
    Corpus corpus;
    corpus.provenance = provenance_from_string(head[2]);
    const auto n = static_cast<std::size_t>(parse_int(head[3]));
    if (lines.size() < n + 1) {
        throw FormatError(manifest_path + ": manifest lists fewer than " + std::to_string(n) + " records");
    }
    const fs::path base = fs::path(manifest_path).parent_path();
    for (std::size_t i = 0; i < n; ++i) {
        std::vector<std::string> fields;
        std::stringstream ss(lines[1 + i]);
        std::string f;
        while (std::getline(ss, f, '\t')) {
            fields.push_back(f);
        }
        if (fields.size() != 4) {
            throw FormatError(manifest_path + ": record " + std::to_string(i) + " needs 4 tab-separated fields");
        }
        CorpusItem item;
        item.motion = read_motion((base / field_value(fields[0], "motion", manifest_path)).string());
        const std::string audio = field_value(fields[1], "audio", manifest_path);
        if (audio != "-") {
            item.audio = read_audio((base / audio).string());
        }
        const std::string text = field_value(fields[2], "text", manifest_path);
        if (text != "-") {
            item.text = text;
        }
        item.label = field_value(fields[3], "label", manifest_path);
        corpus.items.push_back(std::move(item));
    }
    corpus.validate();
    return corpus;
}

}  // namespace tm2d::motion
