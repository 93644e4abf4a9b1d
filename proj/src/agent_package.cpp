#include "pocket/agent_package.hpp"
#include "pocket/errors.hpp"

#include "json.hpp"

#include <fstream>
#include <sstream>

using nlohmann::json;

namespace pocket {

std::string to_string(FieldKind kind) {
    switch (kind) {
        case FieldKind::boolean: return "boolean";
        case FieldKind::text: return "text";
        case FieldKind::count: return "count";
        case FieldKind::endpoint: return "endpoint";
        case FieldKind::endpoint_list: return "endpoint_list";
        case FieldKind::host_id: return "host_id";
        case FieldKind::host_id_list: return "host_id_list";
        case FieldKind::bytes: return "bytes";
        case FieldKind::protocol_label: return "protocol_label";
    }
    return "unknown";
}

std::optional<FieldKind> field_kind_from_string(const std::string& name) {
    static const std::map<std::string, FieldKind> table = {
        {"boolean", FieldKind::boolean},
        {"text", FieldKind::text},
        {"count", FieldKind::count},
        {"endpoint", FieldKind::endpoint},
        {"endpoint_list", FieldKind::endpoint_list},
        {"host_id", FieldKind::host_id},
        {"host_id_list", FieldKind::host_id_list},
        {"bytes", FieldKind::bytes},
        {"protocol_label", FieldKind::protocol_label},
    };
    auto it = table.find(name);
    if (it == table.end()) return std::nullopt;
    return it->second;
}

namespace {

std::string read_file(const std::filesystem::path& path, const std::string& logical_name) {
    if (!std::filesystem::exists(path))
        throw PackageLoadError("MISSING_FILE", "missing file: " + logical_name + " (" + path.string() + ")");
    std::ifstream in(path, std::ios::binary);
    if (!in) throw PackageLoadError("IO_ERROR", "cannot read file: " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

json parse_json_file(const std::filesystem::path& path, const std::string& logical_name) {
    auto text = read_file(path, logical_name);
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        // nlohmann reports "parse error at line L, column C: ..."
        throw PackageLoadError("PARSE_ERROR", logical_name + ": " + e.what());
    }
}

const json& require_key(const json& obj, const std::string& key, const std::string& file) {
    if (!obj.is_object() || !obj.contains(key))
        throw ValidationError(file + ": missing field '" + key + "'");
    return obj.at(key);
}

std::string require_string(const json& obj, const std::string& key, const std::string& file) {
    const json& v = require_key(obj, key, file);
    if (!v.is_string())
        throw ValidationError(file + ": field '" + key + "' must be a string");
    return v.get<std::string>();
}

uint32_t require_count(const json& obj, const std::string& key, const std::string& file) {
    const json& v = require_key(obj, key, file);
    if (!v.is_number_unsigned())
        throw ValidationError(file + ": field '" + key + "' must be a non-negative integer");
    return v.get<uint32_t>();
}

double require_number(const json& obj, const std::string& key, const std::string& file) {
    const json& v = require_key(obj, key, file);
    if (!v.is_number())
        throw ValidationError(file + ": field '" + key + "' must be a number");
    return v.get<double>();
}

Manifest parse_manifest(const json& j) {
    const std::string file = "manifest.json";
    Manifest m;
    m.agent_id = require_string(j, "agent_id", file);
    m.tactical_purpose = require_string(j, "tactical_purpose", file);
    m.trigger_class = require_string(j, "trigger_class", file);

    const json& catalog = require_key(j, "action_catalog", file);
    if (!catalog.is_array())
        throw ValidationError(file + ": field 'action_catalog' must be an array of action names");
    for (const auto& a : catalog) {
        if (!a.is_string())
            throw ValidationError(file + ": action_catalog entries must be strings");
        m.action_catalog.insert(a.get<std::string>());
    }

    const json& schema = require_key(j, "report_schema", file);
    if (!schema.is_array())
        throw ValidationError(file + ": field 'report_schema' must be an array");
    for (const auto& f : schema) {
        FieldSpec spec;
        spec.name = require_string(f, "name", file);
        auto kind_name = require_string(f, "kind", file);
        auto kind = field_kind_from_string(kind_name);
        if (!kind)
            throw ValidationError(file + ": unknown field kind '" + kind_name + "' for '" + spec.name + "'");
        spec.kind = *kind;
        const json& req = require_key(f, "required", file);
        if (!req.is_boolean())
            throw ValidationError(file + ": field 'required' of '" + spec.name + "' must be a boolean");
        spec.required = req.get<bool>();
        m.report_schema.push_back(std::move(spec));
    }

    m.confirmation_field = require_string(j, "confirmation_field", file);
    m.model_backend = require_string(j, "model_backend", file);
    m.query_budget = require_count(j, "query_budget", file);
    if (m.query_budget < 1) throw ValidationError(file + ": query_budget must be ≥ 1");
    m.result_cap = require_count(j, "result_cap", file);
    if (m.result_cap < 1) throw ValidationError(file + ": result_cap must be ≥ 1");
    m.wall_clock_budget_s = require_number(j, "wall_clock_budget_s", file);
    if (!(m.wall_clock_budget_s > 0)) throw ValidationError(file + ": wall_clock_budget_s must be > 0");
    return m;
}

ContextFile parse_context(const json& j) {
    const std::string file = "context.json";
    ContextFile ctx;
    if (j.contains("trusted_subnets")) {
        for (const auto& s : j.at("trusted_subnets")) {
            if (!s.is_string())
                throw ValidationError(file + ": trusted_subnets entries must be strings");
            ctx.trusted_subnets.push_back(s.get<std::string>());
        }
    }
    if (j.contains("host_roles")) {
        const json& roles = j.at("host_roles");
        if (!roles.is_object())
            throw ValidationError(file + ": host_roles must be an object");
        for (auto it = roles.begin(); it != roles.end(); ++it) {
            if (!it.value().is_string())
                throw ValidationError(file + ": host_roles values must be strings");
            ctx.host_roles[it.key()] = it.value().get<std::string>();
        }
    }
    if (j.contains("allowed_destinations")) {
        for (const auto& d : j.at("allowed_destinations")) {
            if (!d.is_string())
                throw ValidationError(file + ": allowed_destinations entries must be strings");
            auto ep = Endpoint::parse(d.get<std::string>());
            if (!ep)
                throw ValidationError(file + ": invalid endpoint '" + d.get<std::string>() + "'");
            ctx.allowed_destinations.push_back(*ep);
        }
    }
    if (j.contains("expected_services")) {
        for (const auto& s : j.at("expected_services")) {
            ExpectedService svc;
            svc.host_id = require_string(s, "host_id", file);
            svc.protocol = require_string(s, "protocol", file);
            auto port = require_count(s, "port", file);
            if (port > 65535) throw ValidationError(file + ": service port out of range");
            svc.port = static_cast<uint16_t>(port);
            ctx.expected_services.push_back(std::move(svc));
        }
    }
    if (j.contains("notes")) {
        if (!j.at("notes").is_string()) throw ValidationError(file + ": notes must be a string");
        ctx.notes = j.at("notes").get<std::string>();
    }
    return ctx;
}

} // namespace

AgentPackage load_package(const std::filesystem::path& dir) {
    if (!std::filesystem::exists(dir) || !std::filesystem::is_directory(dir))
        throw PackageLoadError("MISSING_DIR", "package directory does not exist: " + dir.string());

    AgentPackage pkg;
    pkg.source_dir = dir;
    json manifest_json = parse_json_file(dir / "manifest.json", "manifest.json");
    try {
        pkg.manifest = parse_manifest(manifest_json);
    } catch (const PackageLoadError&) {
        throw;
    } catch (const ValidationError& e) {
        throw PackageLoadError("MANIFEST_SCHEMA", e.what());
    }
    pkg.prompt = read_file(dir / "prompt.txt", "prompt.txt");
    json context_json = parse_json_file(dir / "context.json", "context.json");
    try {
        pkg.context = parse_context(context_json);
    } catch (const PackageLoadError&) {
        throw;
    } catch (const ValidationError& e) {
        throw PackageLoadError("CONTEXT_SCHEMA", e.what());
    }
    return pkg;
}

std::vector<Violation> validate_package(const AgentPackage& pkg) {
    std::vector<Violation> out;
    const Manifest& m = pkg.manifest;

    if (m.agent_id.empty())
        out.push_back({"EMPTY_AGENT_ID", "manifest agent_id must be non-empty"});
    if (m.trigger_class.empty())
        out.push_back({"EMPTY_TRIGGER_CLASS", "manifest trigger_class must be non-empty"});
    if (m.action_catalog.empty())
        out.push_back({"EMPTY_ACTION_CATALOG", "manifest action_catalog must not be empty"});
    if (m.query_budget < 1)
        out.push_back({"QUERY_BUDGET_RANGE", "query_budget must be ≥ 1"});
    if (m.result_cap < 1)
        out.push_back({"RESULT_CAP_RANGE", "result_cap must be ≥ 1"});
    if (!(m.wall_clock_budget_s > 0))
        out.push_back({"WALL_CLOCK_RANGE", "wall_clock_budget_s must be > 0"});

    std::set<std::string> seen;
    for (const auto& f : m.report_schema) {
        if (!seen.insert(f.name).second)
            out.push_back({"DUPLICATE_FIELD", "report_schema field '" + f.name + "' declared twice"});
    }

    const FieldSpec* confirmation = nullptr;
    for (const auto& f : m.report_schema) {
        if (f.name == m.confirmation_field) {
            confirmation = &f;
            break;
        }
    }
    if (confirmation == nullptr) {
        out.push_back({"CONFIRMATION_FIELD_MISSING",
                       "confirmation_field '" + m.confirmation_field + "' not present in report_schema"});
    } else {
        if (confirmation->kind != FieldKind::boolean)
            out.push_back({"CONFIRMATION_FIELD_TYPE",
                           "confirmation_field '" + m.confirmation_field + "' must have kind boolean"});
        if (!confirmation->required)
            out.push_back({"CONFIRMATION_FIELD_OPTIONAL",
                           "confirmation_field '" + m.confirmation_field + "' must be required"});
    }

    // An agent allowed to request network_block must be able to express an
    // enforcement target.
    if (m.action_catalog.count("network_block") > 0) {
        bool has_target = false;
        for (const auto& f : m.report_schema) {
            if (f.required && (f.kind == FieldKind::endpoint || f.kind == FieldKind::endpoint_list))
                has_target = true;
        }
        if (!has_target)
            out.push_back({"NO_ENFORCEMENT_TARGET",
                           "action network_block requires a required endpoint or endpoint_list field"});
    }

    if (pkg.prompt.empty())
        out.push_back({"EMPTY_PROMPT", "prompt.txt must be non-empty"});

    for (const auto& s : pkg.context.trusted_subnets) {
        if (!Ipv4Cidr::parse(s))
            out.push_back({"INVALID_SUBNET", "trusted_subnets entry '" + s + "' is not a valid CIDR range"});
    }

    return out;
}

void Registry::register_package(AgentPackage pkg) {
    auto violations = validate_package(pkg);
    if (!violations.empty())
        throw ValidationError("package '" + pkg.manifest.agent_id + "' fails validation: " +
                              violations.front().code);
    auto id = pkg.manifest.agent_id;
    if (packages_.count(id) > 0)
        throw ValidationError("duplicate agent_id: " + id);
    packages_.emplace(std::move(id), std::move(pkg));
}

const AgentPackage* Registry::by_id(const std::string& agent_id) const {
    auto it = packages_.find(agent_id);
    return it == packages_.end() ? nullptr : &it->second;
}

const AgentPackage* Registry::select_agent(const Trigger& trigger) const {
    const AgentPackage* found = nullptr;
    for (const auto& [id, pkg] : packages_) {
        if (pkg.manifest.trigger_class == trigger.trigger_class) {
            if (found != nullptr)
                throw ValidationError("ambiguous trigger match: agents '" + found->manifest.agent_id +
                                      "' and '" + id + "' both accept trigger_class '" +
                                      trigger.trigger_class + "'");
            found = &pkg;
        }
    }
    return found;
}

std::vector<std::string> Registry::agent_ids() const {
    std::vector<std::string> ids;
    ids.reserve(packages_.size());
    for (const auto& [id, _] : packages_) ids.push_back(id);
    return ids;
}

} // namespace pocket
