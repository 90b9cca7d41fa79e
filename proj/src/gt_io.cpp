#include "tubetrack/gt_io.hpp"

#include <fstream>
#include <sstream>

#include "text_util.hpp"
#include "tubetrack/errors.hpp"

namespace tubetrack {

namespace {

using detail::format_double;
using detail::parse_double;
using detail::parse_int;

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> fields;
    std::string field;
    std::stringstream ss(line);
    while (std::getline(ss, field, ','))
        fields.push_back(field);
    return fields;
}

struct ParsedRow {
    int frame;
    int id;
    double left, top, right, bottom;
    double aux;  // visibility (gt) or confidence (tracker output)
    double aux2 = 1;
};

// Shared row grammar for both CSV flavors. aux_index picks the column of the
// first auxiliary value; wide ground-truth rows override it with index 17.
ParsedRow parse_row(const std::string& line, std::size_t line_no, int aux_index, bool wide_gt_ok,
                    bool has_aux2) {
    const std::vector<std::string> f = split_csv(line);
    const bool wide = wide_gt_ok && f.size() >= 18;
    const int vis_index = wide ? 17 : aux_index;
    const std::size_t needed = static_cast<std::size_t>(has_aux2 ? aux_index + 2 : vis_index + 1);
    if (f.size() < needed)
        throw FormatError("line " + std::to_string(line_no) + ": expected at least " +
                          std::to_string(needed) + " columns, got " + std::to_string(f.size()));

    ParsedRow row;
    long long frame, id;
    if (!parse_int(f[0], frame) || !parse_int(f[1], id))
        throw FormatError("line " + std::to_string(line_no) + ": bad frame or id");
    if (frame < 0 || id < 0)
        throw FormatError("line " + std::to_string(line_no) + ": negative frame or id");
    row.frame = static_cast<int>(frame);
    row.id = static_cast<int>(id);
    if (!parse_double(f[2], row.left) || !parse_double(f[3], row.top) ||
        !parse_double(f[4], row.right) || !parse_double(f[5], row.bottom))
        throw FormatError("line " + std::to_string(line_no) + ": bad box coordinates");
    if (!(row.right > row.left) || !(row.bottom > row.top))
        throw FormatError("line " + std::to_string(line_no) +
                          ": degenerate box (need right > left and bottom > top)");
    if (!parse_double(f[vis_index], row.aux))
        throw FormatError("line " + std::to_string(line_no) + ": bad value at column " +
                          std::to_string(vis_index));
    if (has_aux2 && !parse_double(f[aux_index + 1], row.aux2))
        throw FormatError("line " + std::to_string(line_no) + ": bad value at column " +
                          std::to_string(aux_index + 1));
    return row;
}

TrajectoryMap read_csv(const std::filesystem::path& path, double fw, double fh, bool gt_layout) {
    if (!(fw > 0) || !(fh > 0))
        throw std::invalid_argument("read: frame size must be positive");
    std::ifstream in(path);
    if (!in)
        throw FormatError("cannot open " + path.string());

    TrajectoryMap out;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty())
            continue;
        // gt rows: visibility at column 6 (or 17 when wide); tracker rows:
        // confidence at 6, visibility at 7.
        const ParsedRow row = parse_row(line, line_no, 6, gt_layout, !gt_layout);
        TrackedBox tb;
        tb.box = from_corners(row.left / fw, row.top / fh, row.right / fw, row.bottom / fh);
        tb.visibility = gt_layout ? row.aux : row.aux2;
        if (!(tb.visibility >= 0 && tb.visibility <= 1))
            throw FormatError("line " + std::to_string(line_no) + ": visibility outside [0,1]");
        auto [it, inserted] = out[row.id].emplace(row.frame, tb);
        (void)it;
        if (!inserted)
            throw FormatError("line " + std::to_string(line_no) + ": duplicate (frame, id) pair (" +
                              std::to_string(row.frame) + ", " + std::to_string(row.id) + ")");
    }
    return out;
}

}  // namespace

TrajectoryMap read_ground_truth(const std::filesystem::path& path, double fw, double fh) {
    return read_csv(path, fw, fh, /*gt_layout=*/true);
}

void write_ground_truth(const std::vector<GroundTruthRecord>& records,
                        const std::filesystem::path& path, double fw, double fh) {
    if (!(fw > 0) || !(fh > 0))
        throw std::invalid_argument("write: frame size must be positive");
    std::ofstream out(path, std::ios::binary);  // binary: byte-identical across platforms
    if (!out)
        throw FormatError("cannot open " + path.string() + " for writing");
    for (const GroundTruthRecord& r : records) {
        const Corners c = to_corners(r.box);
        out << r.frame << ',' << r.object_id << ',' << format_double(c.left * fw) << ','
            << format_double(c.top * fh) << ',' << format_double(c.right * fw) << ','
            << format_double(c.bottom * fh) << ',' << format_double(r.visibility) << '\n';
    }
}

void write_tracker_output(const std::vector<OutputRecord>& records,
                          const std::filesystem::path& path, double fw, double fh) {
    if (!(fw > 0) || !(fh > 0))
        throw std::invalid_argument("write: frame size must be positive");
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw FormatError("cannot open " + path.string() + " for writing");
    for (const OutputRecord& r : records) {
        const Corners c = to_corners(r.box);
        out << r.frame << ',' << r.id << ',' << format_double(c.left * fw) << ','
            << format_double(c.top * fh) << ',' << format_double(c.right * fw) << ','
            << format_double(c.bottom * fh) << ',' << format_double(r.confidence) << ','
            << format_double(r.visibility) << '\n';
    }
}

TrajectoryMap read_tracker_output(const std::filesystem::path& path, double fw, double fh) {
    return read_csv(path, fw, fh, /*gt_layout=*/false);
}

std::vector<GroundTruthRecord> to_records(const TrajectoryMap& trajectories) {
    std::vector<GroundTruthRecord> records;
    for (const auto& [id, frames] : trajectories)
        for (const auto& [frame, tb] : frames)
            records.push_back(GroundTruthRecord{frame, id, tb.box, tb.visibility});
    std::sort(records.begin(), records.end(), [](const GroundTruthRecord& a, const GroundTruthRecord& b) {
        return a.frame != b.frame ? a.frame < b.frame : a.object_id < b.object_id;
    });
    return records;
}

}  // namespace tubetrack
