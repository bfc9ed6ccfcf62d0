#include "schema.hpp"

#include <cmath>
#include <string>

#include "schema_text.hpp"

namespace ebind::cli {

using nlohmann::json;

const json& runspec_schema() {
    static const json schema = json::parse(detail::kRunspecSchema);
    return schema;
}

namespace {

std::string type_of(const json& v) {
    if (v.is_null()) return "null";
    if (v.is_boolean()) return "boolean";
    if (v.is_number_integer() || v.is_number_unsigned()) return "integer";
    if (v.is_number()) return "number";
    if (v.is_string()) return "string";
    if (v.is_array()) return "array";
    return "object";
}

bool has_type(const json& v, const std::string& t) {
    if (t == "number") return v.is_number();
    if (t == "integer") {
        if (v.is_number_integer() || v.is_number_unsigned()) return true;
        return v.is_number_float() && std::floor(v.get<double>()) == v.get<double>();
    }
    return type_of(v) == t;
}

std::string escape(const std::string& key) {
    std::string out;
    for (char c : key) {
        if (c == '~')
            out += "~0";
        else if (c == '/')
            out += "~1";
        else
            out += c;
    }
    return out;
}

std::string show(const json& v) {
    std::string s = v.dump();
    return s.size() > 60 ? s.substr(0, 57) + "..." : s;
}

class Validator {
public:
    Validator(const json& root, std::vector<SchemaIssue>& out) : root_(root), out_(out) {}

    void check(const json& s, const json& v, const std::string& path) {
        if (s.is_boolean()) {
            if (!s.get<bool>()) fail(path, "no value is allowed here");
            return;
        }
        if (auto it = s.find("$ref"); it != s.end()) check(resolve(it->get<std::string>()), v, path);

        if (auto it = s.find("type"); it != s.end()) {
            bool ok = false;
            std::string wanted;
            if (it->is_array()) {
                for (const auto& t : *it) {
                    ok = ok || has_type(v, t.get<std::string>());
                    wanted += (wanted.empty() ? "" : " or ") + t.get<std::string>();
                }
            } else {
                wanted = it->get<std::string>();
                ok = has_type(v, wanted);
            }
            if (!ok) {
                fail(path, "expected " + wanted + ", got " + type_of(v));
                return;
            }
        }
        if (auto it = s.find("enum"); it != s.end()) {
            bool found = false;
            for (const auto& e : *it) found = found || e == v;
            if (!found) {
                std::string opts;
                for (const auto& e : *it) opts += (opts.empty() ? "" : ", ") + e.dump();
                fail(path, show(v) + " is not one of " + opts);
            }
        }
        if (v.is_number()) numeric(s, v.get<double>(), path);
        if (v.is_array()) array(s, v, path);
        if (v.is_object()) object(s, v, path);
    }

private:
    const json& resolve(const std::string& ref) {
        if (ref.rfind("#/", 0) != 0) throw std::runtime_error("schema: only local references are supported: " + ref);
        return root_.at(json::json_pointer(ref.substr(1)));
    }

    void numeric(const json& s, double x, const std::string& path) {
        if (auto it = s.find("minimum"); it != s.end() && x < it->get<double>())
            fail(path, "must be >= " + it->dump());
        if (auto it = s.find("maximum"); it != s.end() && x > it->get<double>())
            fail(path, "must be <= " + it->dump());
        if (auto it = s.find("exclusiveMinimum"); it != s.end() && !(x > it->get<double>()))
            fail(path, "must be > " + it->dump());
        if (auto it = s.find("exclusiveMaximum"); it != s.end() && !(x < it->get<double>()))
            fail(path, "must be < " + it->dump());
    }

    void array(const json& s, const json& v, const std::string& path) {
        if (auto it = s.find("minItems"); it != s.end() && v.size() < it->get<std::size_t>())
            fail(path, "needs at least " + it->dump() + " items, got " + std::to_string(v.size()));
        if (auto it = s.find("maxItems"); it != s.end() && v.size() > it->get<std::size_t>())
            fail(path, "allows at most " + it->dump() + " items, got " + std::to_string(v.size()));
        if (auto it = s.find("items"); it != s.end())
            for (std::size_t i = 0; i < v.size(); ++i) check(*it, v[i], path + "/" + std::to_string(i));
    }

    void object(const json& s, const json& v, const std::string& path) {
        if (auto it = s.find("required"); it != s.end())
            for (const auto& k : *it)
                if (!v.contains(k.get<std::string>()))
                    fail(path + "/" + escape(k.get<std::string>()), "required property is missing");
        const json* props = nullptr;
        if (auto it = s.find("properties"); it != s.end()) props = &*it;
        const bool closed = s.contains("additionalProperties") && s["additionalProperties"].is_boolean() &&
                            !s["additionalProperties"].get<bool>();
        for (auto it = v.begin(); it != v.end(); ++it) {
            const std::string p = path + "/" + escape(it.key());
            if (props && props->contains(it.key()))
                check((*props)[it.key()], it.value(), p);
            else if (closed)
                fail(p, "unknown property");
        }
    }

    void fail(const std::string& path, std::string msg) {
        out_.push_back({path.empty() ? "/" : path, std::move(msg)});
    }

    const json& root_;
    std::vector<SchemaIssue>& out_;
};

}  // namespace

std::vector<SchemaIssue> validate(const json& schema, const json& doc) {
    std::vector<SchemaIssue> out;
    Validator(schema, out).check(schema, doc, "");
    return out;
}

}  // namespace ebind::cli
