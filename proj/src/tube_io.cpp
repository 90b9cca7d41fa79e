#include "tubetrack/tube_io.hpp"

#include <fstream>
#include <sstream>

#include "text_util.hpp"
#include "tubetrack/errors.hpp"

namespace tubetrack {

namespace {

using detail::format_double;

constexpr double kBackgroundLogit = 10.0;

bool is_background_row(const PredictionWindow& w, int i) {
    if ((w.motion[i].array() != 0.0).any())
        return false;
    if (w.class_scores(i, 0) != kBackgroundLogit)
        return false;
    for (int c = 1; c < w.n_classes(); ++c)
        if (w.class_scores(i, c) != -kBackgroundLogit)
            return false;
    for (int k = 0; k < w.n_frames; ++k)
        if (w.vis_score(i, k, 0) != kBackgroundLogit || w.vis_score(i, k, 1) != -kBackgroundLogit)
            return false;
    return true;
}

// Whitespace tokenizer that tracks byte offsets for error reporting.
class Reader {
public:
    explicit Reader(std::string text) : text_(std::move(text)) {}

    bool next(std::string& token) {
        while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_])))
            ++pos_;
        if (pos_ >= text_.size())
            return false;
        token_start_ = pos_;
        while (pos_ < text_.size() && !std::isspace(static_cast<unsigned char>(text_[pos_])))
            ++pos_;
        token = text_.substr(token_start_, pos_ - token_start_);
        return true;
    }

    std::string expect(const char* what) {
        std::string token;
        if (!next(token))
            throw FormatError("tube file truncated at byte offset " + std::to_string(pos_) +
                              ": expected " + what);
        return token;
    }

    double expect_double(const char* what) {
        const std::string token = expect(what);
        double v;
        if (!detail::parse_double(token, v))
            throw FormatError("tube file: bad " + std::string(what) + " '" + token +
                              "' at byte offset " + std::to_string(token_start_));
        return v;
    }

    long long expect_int(const char* what) {
        const std::string token = expect(what);
        long long v;
        if (!detail::parse_int(token, v))
            throw FormatError("tube file: bad " + std::string(what) + " '" + token +
                              "' at byte offset " + std::to_string(token_start_));
        return v;
    }

    std::size_t offset() const { return token_start_; }

private:
    std::string text_;
    std::size_t pos_ = 0;
    std::size_t token_start_ = 0;
};

}  // namespace

void background_prediction(PredictionWindow& w, int i) {
    w.motion[i].setZero();
    w.class_scores.row(i).setConstant(-kBackgroundLogit);
    w.class_scores(i, 0) = kBackgroundLogit;
    for (int k = 0; k < w.n_frames; ++k) {
        w.vis_scores(i, 2 * k) = kBackgroundLogit;
        w.vis_scores(i, 2 * k + 1) = -kBackgroundLogit;
    }
}

void write_tube_file(const TubeFile& tubes, const std::filesystem::path& path) {
    tubes.basis.validate();
    if (tubes.basis.n_frames != tubes.n_frames)
        throw std::invalid_argument("tube file: basis frame count != n_frames");
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw FormatError("cannot open " + path.string() + " for writing");

    out << "tubetrack-tubes 1\n";
    out << "anchors " << tubes.n_anchors << " frames " << tubes.n_frames << " classes "
        << tubes.n_classes << '\n';
    out << "basis " << format_double(tubes.basis.tau0) << ' ' << format_double(tubes.basis.dtau)
        << '\n';

    for (const PredictionWindow& w : tubes.windows) {
        if (w.n_anchors() != tubes.n_anchors || w.n_frames != tubes.n_frames ||
            w.n_classes() != tubes.n_classes)
            throw std::invalid_argument("tube file: window shape disagrees with header");
        out << "window " << w.window_start << '\n';
        for (int i = 0; i < tubes.n_anchors; ++i) {
            if (is_background_row(w, i))
                continue;
            out << i;
            for (int r = 0; r < 4; ++r)
                for (int c = 0; c < 3; ++c)
                    out << ' ' << format_double(w.motion[i](r, c));
            for (int c = 0; c < tubes.n_classes; ++c)
                out << ' ' << format_double(w.class_scores(i, c));
            for (int k = 0; k < 2 * tubes.n_frames; ++k)
                out << ' ' << format_double(w.vis_scores(i, k));
            out << '\n';
        }
    }
}

TubeFile read_tube_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw FormatError("cannot open " + path.string());
    std::ostringstream buffer;
    buffer << in.rdbuf();
    Reader reader(buffer.str());

    if (reader.expect("magic") != "tubetrack-tubes")
        throw FormatError("tube file: bad magic (expected 'tubetrack-tubes')");
    if (reader.expect_int("version") != 1)
        throw FormatError("tube file: unsupported version");

    TubeFile tubes;
    auto keyword = [&](const char* kw) {
        const std::string token = reader.expect(kw);
        if (token != kw)
            throw FormatError("tube file: expected '" + std::string(kw) + "', got '" + token +
                              "' at byte offset " + std::to_string(reader.offset()));
    };
    keyword("anchors");
    tubes.n_anchors = static_cast<int>(reader.expect_int("anchor count"));
    keyword("frames");
    tubes.n_frames = static_cast<int>(reader.expect_int("frame count"));
    keyword("classes");
    tubes.n_classes = static_cast<int>(reader.expect_int("class count"));
    keyword("basis");
    tubes.basis.tau0 = reader.expect_double("basis tau0");
    tubes.basis.dtau = reader.expect_double("basis dtau");
    tubes.basis.n_frames = tubes.n_frames;
    if (tubes.n_anchors < 1 || tubes.n_frames < 2 || tubes.n_classes < 2)
        throw FormatError("tube file: invalid header counts");
    tubes.basis.validate();

    PredictionWindow* current = nullptr;
    int last_anchor = -1;
    std::string token;
    while (reader.next(token)) {
        if (token == "window") {
            const long long start = reader.expect_int("window start");
            if (current && start <= current->window_start)
                throw FormatError("tube file: window starts must be strictly increasing");
            PredictionWindow w;
            w.window_start = static_cast<int>(start);
            w.n_frames = tubes.n_frames;
            w.motion.assign(tubes.n_anchors, MotionParams::Zero());
            w.class_scores.resize(tubes.n_anchors, tubes.n_classes);
            w.vis_scores.resize(tubes.n_anchors, 2 * tubes.n_frames);
            tubes.windows.push_back(std::move(w));
            current = &tubes.windows.back();
            for (int i = 0; i < tubes.n_anchors; ++i)
                background_prediction(*current, i);
            last_anchor = -1;
            continue;
        }
        if (!current)
            throw FormatError("tube file: record before the first window header at byte offset " +
                              std::to_string(reader.offset()));
        long long anchor;
        if (!detail::parse_int(token, anchor))
            throw FormatError("tube file: bad anchor index '" + token + "' at byte offset " +
                              std::to_string(reader.offset()));
        if (anchor < 0 || anchor >= tubes.n_anchors)
            throw FormatError("tube file: anchor index " + std::to_string(anchor) +
                              " outside [0, " + std::to_string(tubes.n_anchors) + ")");
        if (anchor <= last_anchor)
            throw FormatError("tube file: anchor indices must be strictly increasing per window");
        last_anchor = static_cast<int>(anchor);

        const int i = static_cast<int>(anchor);
        for (int r = 0; r < 4; ++r)
            for (int c = 0; c < 3; ++c)
                current->motion[i](r, c) = reader.expect_double("motion value");
        for (int c = 0; c < tubes.n_classes; ++c)
            current->class_scores(i, c) = reader.expect_double("class score");
        for (int k = 0; k < 2 * tubes.n_frames; ++k)
            current->vis_scores(i, k) = reader.expect_double("visibility score");
    }
    return tubes;
}

}  // namespace tubetrack
