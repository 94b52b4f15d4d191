#include "hre/csv_io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <ostream>
#include <sstream>

#include "hre/errors.hpp"

namespace hre {

namespace {

std::string trim(const std::string& s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string::npos) return "";
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

// Comma separated, with optional double quotes around a field ("" escapes
// a quote inside quotes).
std::vector<std::string> split_fields(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    bool quoted = false;
    for (std::size_t k = 0; k < line.size(); ++k) {
        const char ch = line[k];
        if (quoted) {
            if (ch == '"' && k + 1 < line.size() && line[k + 1] == '"') {
                cur += '"';
                ++k;
            } else if (ch == '"') {
                quoted = false;
            } else {
                cur += ch;
            }
        } else if (ch == '"') {
            quoted = true;
        } else if (ch == ',') {
            out.push_back(trim(cur));
            cur.clear();
        } else {
            cur += ch;
        }
    }
    out.push_back(trim(cur));
    return out;
}

double parse_number(const std::string& text, const std::string& file, long row,
                    const std::string& column) {
    double v = 0.0;
    const char* first = text.data();
    const char* last = text.data() + text.size();
    const auto [ptr, ec] = std::from_chars(first, last, v);
    if (text.empty() || ec != std::errc() || ptr != last || !std::isfinite(v))
        throw ParseError(file, row, column, "cannot parse '" + text + "' as a finite number");
    return v;
}

std::string fmt17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

}  // namespace

PanelDataset parse_panel_csv(std::istream& in, const std::string& name,
                             const CsvPanelFormat& format) {
    std::string line;
    long row = 0;
    std::map<std::string, std::size_t> index;

    std::vector<std::string> wanted{format.group_column, format.response_column};
    wanted.insert(wanted.end(), format.covariate_columns.begin(), format.covariate_columns.end());
    std::vector<std::size_t> pos(wanted.size());

    if (format.has_header) {
        // Skip leading blank lines.
        while (std::getline(in, line)) {
            ++row;
            if (!trim(line).empty()) break;
        }
        if (trim(line).empty()) throw ParseError(name, row, "", "file is empty");
        const std::vector<std::string> head = split_fields(line);
        for (std::size_t c = 0; c < head.size(); ++c) index.emplace(head[c], c);
        for (std::size_t w = 0; w < wanted.size(); ++w) {
            const auto it = index.find(wanted[w]);
            if (it == index.end())
                throw ParseError(name, row, wanted[w], "column not found in header");
            pos[w] = it->second;
        }
    } else {
        for (std::size_t w = 0; w < wanted.size(); ++w) {
            std::size_t c = 0;
            const auto [ptr, ec] =
                std::from_chars(wanted[w].data(), wanted[w].data() + wanted[w].size(), c);
            if (ec != std::errc() || ptr != wanted[w].data() + wanted[w].size() || c == 0)
                throw ParseError(name, 0, wanted[w],
                                 "without a header, columns must be 1-based positions");
            pos[w] = c - 1;
        }
    }

    const std::size_t p = format.covariate_columns.size() + 1;
    std::vector<Group> groups;
    std::map<std::string, std::size_t> group_index;
    std::vector<std::vector<double>> rows_of;  // flattened design rows per group

    while (std::getline(in, line)) {
        ++row;
        if (trim(line).empty()) continue;
        const std::vector<std::string> fields = split_fields(line);
        for (std::size_t w = 0; w < wanted.size(); ++w)
            if (pos[w] >= fields.size())
                throw ParseError(name, row, wanted[w], "row has too few fields");

        const std::string& id = fields[pos[0]];
        if (id.empty()) throw ParseError(name, row, wanted[0], "empty group label");
        const double y = parse_number(fields[pos[1]], name, row, wanted[1]);
        if (!(y > 0.0))
            throw ParseError(name, row, wanted[1], "response must be positive, got " + fields[pos[1]]);

        auto [it, inserted] = group_index.emplace(id, groups.size());
        if (inserted) {
            groups.push_back(Group{id, {}, DenseMatrix()});
            rows_of.emplace_back();
        }
        const std::size_t gi = it->second;
        groups[gi].responses.push_back(y);
        std::vector<double>& flat = rows_of[gi];
        flat.push_back(1.0);
        for (std::size_t w = 2; w < wanted.size(); ++w)
            flat.push_back(parse_number(fields[pos[w]], name, row, wanted[w]));
    }
    if (groups.empty()) throw ParseError(name, row, "", "no data rows");

    for (std::size_t gi = 0; gi < groups.size(); ++gi) {
        const std::size_t n = groups[gi].responses.size();
        groups[gi].design = DenseMatrix(n, p, std::move(rows_of[gi]));
    }
    return PanelDataset(std::move(groups));
}

PanelDataset read_panel_csv(const std::string& path, const CsvPanelFormat& format) {
    std::ifstream in(path);
    if (!in) throw ParseError(path, 0, "", "cannot open file");
    return parse_panel_csv(in, path, format);
}

void write_panel_csv(std::ostream& out, const PanelDataset& data,
                     const std::vector<std::string>& covariate_names) {
    if (covariate_names.size() + 1 != data.num_covariates())
        throw DimensionMismatch("write_panel_csv: need one name per non-intercept covariate");
    out << "group,y";
    for (const std::string& n : covariate_names) out << ',' << n;
    out << '\n';
    for (const Group& g : data.groups())
        for (std::size_t j = 0; j < g.size(); ++j) {
            out << g.id << ',' << fmt17(g.responses[j]);
            for (std::size_t c = 1; c < data.num_covariates(); ++c) out << ',' << fmt17(g.design(j, c));
            out << '\n';
        }
}

std::uint64_t fnv1a64(const std::string& bytes, std::uint64_t state) {
    for (const unsigned char ch : bytes) {
        state ^= ch;
        state *= 0x100000001b3ULL;
    }
    return state;
}

std::string dataset_digest(const PanelDataset& data) {
    std::ostringstream text;
    for (const Group& g : data.groups()) {
        text << g.id << '\n';
        for (std::size_t j = 0; j < g.size(); ++j) {
            text << fmt17(g.responses[j]);
            for (std::size_t c = 0; c < data.num_covariates(); ++c) text << ' ' << fmt17(g.design(j, c));
            text << '\n';
        }
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a64(text.str())));
    return buf;
}

}  // namespace hre
