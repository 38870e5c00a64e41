#pragma once

#include "nl2vis/vega_zero/ast.hpp"
#include "nl2vis/vega_zero/ast_json.hpp"
#include "nl2vis/vega_zero/json_schema.hpp"
#include "nl2vis/vega_zero/lexer.hpp"
#include "nl2vis/vega_zero/parser.hpp"
#include "nl2vis/vega_zero/schema.hpp"
#include "nl2vis/vega_zero/serializer.hpp"
#include "nl2vis/vega_zero/validate.hpp"
#include "nl2vis/vega_zero/vegalite.hpp"
#include "nl2vis/vega_zero/vql.hpp"
