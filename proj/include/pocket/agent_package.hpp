#pragma once
#include "pocket/endpoint.hpp"
#include "pocket/errors.hpp"
#include "pocket/trigger.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace pocket {

// Closed vocabulary for report field values so structural validation stays
// decidable.
enum class FieldKind {
    boolean,
    text,
    count,
    endpoint,
    endpoint_list,
    host_id,
    host_id_list,
    bytes,
    protocol_label,
};

std::string to_string(FieldKind kind);
std::optional<FieldKind> field_kind_from_string(const std::string& name);

struct FieldSpec {
    std::string name;
    FieldKind kind = FieldKind::text;
    bool required = false;

    auto operator<=>(const FieldSpec&) const = default;
};

struct Manifest {
    std::string agent_id;
    std::string tactical_purpose;
    std::string trigger_class;
    std::set<std::string> action_catalog;
    std::vector<FieldSpec> report_schema;
    std::string confirmation_field;
    std::string model_backend;
    uint32_t query_budget = 0;
    uint32_t result_cap = 0;
    double wall_clock_budget_s = 0.0;

    auto operator<=>(const Manifest&) const = default;
};

struct ExpectedService {
    std::string host_id;
    std::string protocol;
    uint16_t port = 0;

    auto operator<=>(const ExpectedService&) const = default;
};

struct ContextFile {
    std::vector<std::string> trusted_subnets; // CIDR text, validated syntactically
    std::map<std::string, std::string> host_roles;
    std::vector<Endpoint> allowed_destinations;
    std::vector<ExpectedService> expected_services;
    std::string notes;

    auto operator<=>(const ContextFile&) const = default;
};

struct AgentPackage {
    Manifest manifest;
    std::string prompt;
    ContextFile context;
    std::filesystem::path source_dir;

    bool operator==(const AgentPackage& other) const {
        return manifest == other.manifest && prompt == other.prompt && context == other.context;
    }
};

struct Violation {
    std::string code; // stable machine-readable identifier, UPPER_SNAKE
    std::string message;
};

// Load failures carry a machine-readable code so `pocket validate` can
// print them in the same CODE<TAB>message shape as violations.
class PackageLoadError : public ValidationError {
public:
    PackageLoadError(std::string code, const std::string& msg)
        : ValidationError(msg), code_(std::move(code)) {}

    const std::string& code() const { return code_; }

private:
    std::string code_;
};

// Reads manifest.json, prompt.txt and context.json from dir. Throws
// ValidationError naming the missing file, the parse location, or the
// offending manifest field; no partially constructed package escapes.
AgentPackage load_package(const std::filesystem::path& dir);

// Total over any parsed package: violations are values, never throws.
std::vector<Violation> validate_package(const AgentPackage& pkg);

class Registry {
public:
    // pre: validate_package(pkg) is empty. Throws ValidationError on a
    // duplicate agent_id or a non-clean package.
    void register_package(AgentPackage pkg);

    const AgentPackage* by_id(const std::string& agent_id) const;

    // The unique package whose manifest trigger_class matches; nullptr when
    // none. Two matches is an error: one compatible agent per scenario.
    const AgentPackage* select_agent(const Trigger& trigger) const;

    size_t size() const { return packages_.size(); }
    std::vector<std::string> agent_ids() const;

private:
    std::map<std::string, AgentPackage> packages_;
};

} // namespace pocket
