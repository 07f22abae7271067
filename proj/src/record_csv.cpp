#include "xlabel/csv.hpp"
#include "xlabel/errors.hpp"
#include "xlabel/ncd.hpp"

#include <charconv>
#include <cmath>
#include <set>
#include <unordered_map>

namespace xlabel::ncd {

namespace {

enum class Column { Id, Age, Sex, Height, Weight, Lab, Icd10, Drugs, Note, Label, Ignored };

struct ColumnSpec {
    Column kind;
    std::size_t slot = 0;  // lab or task index
};

const std::vector<std::pair<std::string, ColumnSpec>>& base_columns() {
    static const std::vector<std::pair<std::string, ColumnSpec>> cols = [] {
        std::vector<std::pair<std::string, ColumnSpec>> c{
            {"id", {Column::Id}},         {"age", {Column::Age}},       {"sex", {Column::Sex}},
            {"height", {Column::Height}}, {"weight", {Column::Weight}},
        };
        for (std::size_t l = 0; l < kAllLabs.size(); ++l) {
            c.push_back({std::string(to_string(kAllLabs[l])), {Column::Lab, l}});
        }
        c.push_back({"icd10", {Column::Icd10}});
        c.push_back({"drugs", {Column::Drugs}});
        c.push_back({"note", {Column::Note}});
        return c;
    }();
    return cols;
}

std::optional<double> parse_number(const std::string& text, std::size_t row, const std::string& column) {
    if (text.empty()) {
        return std::nullopt;
    }
    double v = 0.0;
    const auto* end = text.data() + text.size();
    const auto [ptr, ec] = std::from_chars(text.data(), end, v);
    if (ec != std::errc{} || ptr != end || !std::isfinite(v)) {
        throw CsvError("'" + text + "' is not a number", row, column);
    }
    return v;
}

std::vector<std::string> split_list(const std::string& text) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (start <= text.size()) {
        const auto semi = text.find(';', start);
        std::string item = text.substr(start, semi == std::string::npos ? std::string::npos : semi - start);
        const auto first = item.find_first_not_of(' ');
        const auto last = item.find_last_not_of(' ');
        if (first != std::string::npos) {
            out.push_back(item.substr(first, last - first + 1));
        }
        if (semi == std::string::npos) {
            break;
        }
        start = semi + 1;
    }
    return out;
}

std::string join_list(const std::vector<std::string>& items) {
    std::string out;
    for (std::size_t i = 0; i < items.size(); ++i) {
        out += (i == 0 ? "" : ";") + items[i];
    }
    return out;
}

std::string optional_number(const std::optional<double>& v) { return v ? csv::format_number(*v) : ""; }

} // namespace

std::string label_column(Task task) { return std::string(to_string(task)) + "_label"; }

RecordTable read_records_csv(std::string_view text) {
    const auto rows = csv::parse(text);
    if (rows.empty()) {
        throw CsvError("empty file: a header row is required", 1, "");
    }

    std::unordered_map<std::string, ColumnSpec> known;
    for (const auto& [name, spec] : base_columns()) {
        known.emplace(name, spec);
    }
    for (const Task t : kChainOrder) {
        known.emplace(label_column(t), ColumnSpec{Column::Label, index_of(t)});
        // written by session exports; labels re-import as IMPORTED anyway
        known.emplace(std::string(to_string(t)) + "_provenance", ColumnSpec{Column::Ignored, index_of(t)});
    }

    const auto& header = rows.front().fields;
    std::vector<ColumnSpec> layout;
    std::set<std::string> seen;
    RecordTable table;
    for (const auto& raw_name : header) {
        std::string name = raw_name;
        if (layout.empty() && name.rfind("\xEF\xBB\xBF", 0) == 0) {
            name.erase(0, 3);  // UTF-8 byte order mark
        }
        const auto it = known.find(name);
        if (it == known.end()) {
            throw CsvError("unknown column", rows.front().line, name);
        }
        if (!seen.insert(name).second) {
            throw CsvError("duplicate column", rows.front().line, name);
        }
        layout.push_back(it->second);
        if (it->second.kind == Column::Label) {
            table.has_label_column[it->second.slot] = true;
        }
    }
    if (!seen.contains("id")) {
        throw CsvError("missing required column", rows.front().line, "id");
    }

    std::set<std::string> ids;
    for (std::size_t r = 1; r < rows.size(); ++r) {
        const auto& row = rows[r];
        if (row.fields.size() != header.size()) {
            throw CsvError("expected " + std::to_string(header.size()) + " fields, found " +
                               std::to_string(row.fields.size()),
                           row.line, "");
        }
        RawRecord rec;
        std::array<std::optional<int>, kTaskCount> labels{};
        for (std::size_t c = 0; c < layout.size(); ++c) {
            const std::string& value = row.fields[c];
            const std::string& column = header[c];
            switch (layout[c].kind) {
            case Column::Id:
                if (value.empty()) {
                    throw CsvError("record id is empty", row.line, column);
                }
                rec.id = value;
                break;
            case Column::Age:
                rec.age = parse_number(value, row.line, column);
                break;
            case Column::Sex:
                rec.sex = value;
                break;
            case Column::Height:
                rec.height = parse_number(value, row.line, column);
                break;
            case Column::Weight:
                rec.weight = parse_number(value, row.line, column);
                break;
            case Column::Lab: {
                auto v = parse_number(value, row.line, column);
                if (v && *v < 0.0) {
                    throw CsvError("lab values cannot be negative", row.line, column);
                }
                rec.labs[layout[c].slot] = v;
                break;
            }
            case Column::Icd10:
                rec.icd10_codes = split_list(value);
                break;
            case Column::Drugs:
                rec.drugs = split_list(value);
                break;
            case Column::Note:
                rec.note = value;
                break;
            case Column::Ignored:
                break;
            case Column::Label:
                if (value == "0" || value == "1") {
                    labels[layout[c].slot] = value == "1" ? 1 : 0;
                } else if (!value.empty()) {
                    throw CsvError("labels must be 0, 1 or empty, found '" + value + "'", row.line, column);
                }
                break;
            }
        }
        if (!ids.insert(rec.id).second) {
            throw CsvError("duplicate record id '" + rec.id + "'", row.line, "id");
        }
        table.records.push_back(std::move(rec));
        for (std::size_t t = 0; t < kTaskCount; ++t) {
            if (table.has_label_column[t]) {
                table.labels[t].push_back(labels[t]);
            }
        }
    }
    return table;
}

std::string write_records_csv(const RecordTable& table, std::span<const ExtraColumn> extra) {
    std::string out;
    std::vector<std::string> header;
    for (const auto& [name, spec] : base_columns()) {
        header.push_back(name);
    }
    for (const Task t : kChainOrder) {
        if (table.has_label_column[index_of(t)]) {
            header.push_back(label_column(t));
        }
    }
    for (const auto& col : extra) {
        if (col.values.size() != table.records.size()) {
            throw InvalidInput("extra column '" + col.name + "' has the wrong number of values");
        }
        header.push_back(col.name);
    }
    auto emit = [&out](const std::vector<std::string>& fields) {
        for (std::size_t i = 0; i < fields.size(); ++i) {
            if (i > 0) {
                out.push_back(',');
            }
            out += csv::escape(fields[i]);
        }
        out.push_back('\n');
    };
    emit(header);

    for (std::size_t r = 0; r < table.records.size(); ++r) {
        const RawRecord& rec = table.records[r];
        std::vector<std::string> fields{rec.id, optional_number(rec.age), rec.sex, optional_number(rec.height),
                                        optional_number(rec.weight)};
        for (const auto& lab : rec.labs) {
            fields.push_back(optional_number(lab));
        }
        fields.push_back(join_list(rec.icd10_codes));
        fields.push_back(join_list(rec.drugs));
        fields.push_back(rec.note);
        for (const Task t : kChainOrder) {
            if (table.has_label_column[index_of(t)]) {
                const auto& label = table.labels[index_of(t)].at(r);
                fields.push_back(label ? std::to_string(*label) : "");
            }
        }
        for (const auto& col : extra) {
            fields.push_back(col.values[r]);
        }
        emit(fields);
    }
    return out;
}

} // namespace xlabel::ncd
