#include "lossmpt/feeder_io.hpp"

#include "lossmpt/errors.hpp"

#include <charconv>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <system_error>
#include <vector>

namespace lossmpt {

namespace {

enum class Section { None, Base, Bus, Source, Branch, Load };

std::string_view trim(std::string_view s)
{
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string_view::npos) {
        return {};
    }
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

std::vector<std::string_view> split_fields(std::string_view line)
{
    std::vector<std::string_view> fields;
    std::size_t pos = 0;
    while (pos < line.size()) {
        const auto start = line.find_first_not_of(" \t,", pos);
        if (start == std::string_view::npos) {
            break;
        }
        auto end = line.find_first_of(" \t,", start);
        if (end == std::string_view::npos) {
            end = line.size();
        }
        fields.push_back(line.substr(start, end - start));
        pos = end;
    }
    return fields;
}

double parse_number(std::string_view field, std::size_t line)
{
    double value = 0.0;
    const auto* begin = field.data();
    const auto* end = field.data() + field.size();
    if (!field.empty() && *begin == '+') {
        ++begin;
    }
    const auto [ptr, ec] = std::from_chars(begin, end, value);
    if (ec != std::errc() || ptr != end) {
        throw ParseError("line " + std::to_string(line) + ": '" + std::string(field) + "' is not a number", line);
    }
    return value;
}

void expect_fields(const std::vector<std::string_view>& fields, std::size_t count, std::string_view section,
                   std::size_t line)
{
    if (fields.size() != count) {
        throw ParseError("line " + std::to_string(line) + ": [" + std::string(section) + "] entries need " +
                             std::to_string(count) + " fields, found " + std::to_string(fields.size()),
                         line);
    }
}

Section section_named(std::string_view name, std::size_t line)
{
    if (name == "base") {
        return Section::Base;
    }
    if (name == "bus") {
        return Section::Bus;
    }
    if (name == "source") {
        return Section::Source;
    }
    if (name == "branch") {
        return Section::Branch;
    }
    if (name == "load") {
        return Section::Load;
    }
    if (name == "regulator" || name == "regulators") {
        throw ParseError("line " + std::to_string(line) +
                             ": voltage regulators are not supported; fix the tap and model it as a branch",
                         line);
    }
    throw ParseError("line " + std::to_string(line) + ": unknown section [" + std::string(name) + "]", line);
}

}  // namespace

FeederModel parse_feeder(std::string_view text)
{
    std::vector<BusId> buses;
    std::vector<FeederBranch> branches;
    std::map<BusId, ComplexPower> loads;
    std::optional<GridBase> base;
    std::optional<std::pair<BusId, double>> source;

    Section section = Section::None;
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        auto eol = text.find('\n', pos);
        if (eol == std::string_view::npos) {
            eol = text.size();
        }
        auto line = text.substr(pos, eol - pos);
        pos = eol + 1;
        ++line_no;

        if (const auto hash = line.find('#'); hash != std::string_view::npos) {
            line = line.substr(0, hash);
        }
        line = trim(line);
        if (line.empty()) {
            continue;
        }
        if (line.front() == '[') {
            if (line.back() != ']') {
                throw ParseError("line " + std::to_string(line_no) + ": unterminated section header", line_no);
            }
            section = section_named(trim(line.substr(1, line.size() - 2)), line_no);
            continue;
        }

        const auto fields = split_fields(line);
        switch (section) {
        case Section::None:
            throw ParseError("line " + std::to_string(line_no) + ": data before the first section header", line_no);
        case Section::Base:
            expect_fields(fields, 2, "base", line_no);
            if (base) {
                throw ParseError("line " + std::to_string(line_no) + ": [base] given twice", line_no);
            }
            base = GridBase{parse_number(fields[0], line_no), parse_number(fields[1], line_no)};
            break;
        case Section::Bus:
            for (auto id : fields) {
                buses.emplace_back(id);
            }
            break;
        case Section::Source:
            expect_fields(fields, 2, "source", line_no);
            if (source) {
                throw ParseError("line " + std::to_string(line_no) + ": a feeder has exactly one source", line_no);
            }
            source = std::make_pair(BusId(fields[0]), parse_number(fields[1], line_no));
            break;
        case Section::Branch:
            expect_fields(fields, 5, "branch", line_no);
            branches.push_back({BusId(fields[0]), BusId(fields[1]),
                                {parse_number(fields[2], line_no), parse_number(fields[3], line_no)},
                                parse_number(fields[4], line_no)});
            break;
        case Section::Load: {
            expect_fields(fields, 3, "load", line_no);
            auto& load = loads[BusId(fields[0])];
            load = load + ComplexPower{parse_number(fields[1], line_no), parse_number(fields[2], line_no)};
            break;
        }
        }
    }

    if (!source) {
        throw ParseError("feeder has no [source] entry", line_no);
    }
    return FeederModel::build(std::move(buses), source->first, source->second, std::move(branches), std::move(loads),
                              base);
}

FeederModel read_feeder_file(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw std::filesystem::filesystem_error("cannot open feeder file", path,
                                                std::make_error_code(std::errc::no_such_file_or_directory));
    }
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return parse_feeder(buffer.str());
}

}  // namespace lossmpt
