#include "report_schema.hpp"

#include <rapidjson/document.h>
#include <rapidjson/error/en.h>
#include <rapidjson/schema.h>
#include <rapidjson/stringbuffer.h>

#include <stdexcept>

#include "schema_text.hpp"

namespace causalreg::tools {

const std::string& report_schema_text() {
  static const std::string text = generated::kReportSchemaText;
  return text;
}

namespace {

const rapidjson::SchemaDocument& schema_document() {
  static const rapidjson::SchemaDocument doc = [] {
    rapidjson::Document d;
    d.Parse(report_schema_text().c_str());
    if (d.HasParseError()) throw std::logic_error("embedded report schema is not valid JSON");
    return rapidjson::SchemaDocument(d);
  }();
  return doc;
}

}  // namespace

std::vector<std::string> validate_report(const std::string& json_text) {
  rapidjson::Document d;
  d.Parse(json_text.c_str());
  if (d.HasParseError())
    return {std::string("not valid JSON at offset ") + std::to_string(d.GetErrorOffset()) + ": " +
            rapidjson::GetParseError_En(d.GetParseError())};
  rapidjson::SchemaValidator validator(schema_document());
  if (d.Accept(validator)) return {};
  rapidjson::StringBuffer where, keyword;
  validator.GetInvalidSchemaPointer().StringifyUriFragment(keyword);
  validator.GetInvalidDocumentPointer().StringifyUriFragment(where);
  return {std::string("document ") + where.GetString() + " violates schema " + keyword.GetString() +
          " (" + validator.GetInvalidSchemaKeyword() + ")"};
}

}  // namespace causalreg::tools
