#!/usr/bin/env python3
"""Regenerates data/mini_corpus.jsonl and data/mini_schema.json.

Every pair is rendered from a structured query description, so the natural
language and the vega-zero label always agree. Output is deterministic.
"""

import json
import pathlib

TABLES = {
    "employees": {
        "columns": [("hire_date", "temporal"), ("salary", "numeric"), ("department_id", "numeric"),
                    ("manager_id", "numeric"), ("job_id", "categorical"),
                    ("first_name", "categorical"), ("last_name", "categorical"),
                    ("commission_pct", "numeric")],
        "values": ["Bull", "Lex", "Seo", "Bell", "Chen", "Lee", "Gee", "Banda", "King", "Baer", "Fay"],
    },
    "tourist_attractions": {
        "columns": [("name", "categorical"), ("how_to_get_there", "categorical"),
                    ("opening_date", "temporal"), ("visitors", "numeric")],
        "values": ["walk", "bus", "shuttle"],
    },
    "apartment_bookings": {
        "columns": [("booking_start_date", "temporal"), ("booking_status_code", "categorical"),
                    ("apt_id", "numeric"), ("guest_id", "numeric")],
        "values": [],
    },
    "customer": {
        "columns": [("cust_name", "categorical"), ("acc_bal", "numeric"), ("state", "categorical"),
                    ("credit_score", "numeric")],
        "values": ["Mary", "Jack", "Owen", "Texas", "Ohio"],
    },
    "products": {
        "columns": [("product_name", "categorical"), ("price", "numeric"),
                    ("category", "categorical"), ("launch_date", "temporal")],
        "values": ["Toys", "Books", "Garden"],
    },
    "stadium": {
        "columns": [("name", "categorical"), ("capacity", "numeric"), ("city", "categorical"),
                    ("average", "numeric"), ("opening_year", "numeric")],
        "values": ["Ayr", "Balmoor", "Glebe"],
    },
}

CHART_PHRASE = {"bar": "bar chart", "line": "line chart", "arc": "pie chart", "point": "scatter plot"}
AGG_PHRASE = {"none": "the value of", "count": "the number of", "sum": "the total",
              "avg": "the average", "max": "the maximum", "min": "the minimum"}
OP_PHRASE = {"=": "equals", "!=": "does not equal", "<": "is below", ">": "is above",
             "<=": "is at most", ">=": "is at least"}
DIR_PHRASE = {"asc": "ascending", "desc": "descending"}


def h(name):
    return name.replace("_", " ")


# (table, chart, x, agg, y, extras, hardness)
# extras keys: color, filter (list of (col, op, value[, upper]) and connectives), group, sort, bin, topk
Q = [
    ("employees", "bar", "job_id", "sum", "manager_id", {"group": "x", "sort": ("x", "asc")}, "Medium"),
    ("employees", "line", "hire_date", "count", "hire_date", {"bin": "month"}, "Easy"),
    ("employees", "bar", "hire_date", "count", "hire_date",
     {"filter": ([("salary", "between", "8000", "12000"), ("commission_pct", "!=", '"null"'),
                  ("department_id", "!=", "40")], ["and", "or"]), "bin": "month"}, "Extra Hard"),
    ("employees", "point", "salary", "none", "commission_pct", {}, "Easy"),
    ("employees", "arc", "job_id", "count", "job_id", {"group": "x"}, "Easy"),
    ("employees", "bar", "first_name", "none", "salary", {"sort": ("y", "desc")}, "Medium"),
    ("employees", "bar", "job_id", "avg", "salary", {"group": "x", "sort": ("y", "asc")}, "Medium"),
    ("employees", "line", "hire_date", "avg", "salary", {"bin": "year"}, "Medium"),
    ("employees", "point", "department_id", "max", "salary", {"group": "x"}, "Medium"),
    ("employees", "bar", "last_name", "none", "department_id",
     {"filter": ([("salary", ">", "10000")], []), "sort": ("x", "desc")}, "Hard"),
    ("employees", "arc", "job_id", "sum", "salary", {"group": "x"}, "Medium"),
    ("employees", "bar", "hire_date", "sum", "department_id", {"bin": "weekday"}, "Hard"),
    ("employees", "line", "hire_date", "max", "salary",
     {"filter": ([("job_id", "!=", "'IT_PROG'")], []), "bin": "quarter"}, "Hard"),
    ("employees", "bar", "job_id", "count", "job_id", {"group": "x", "topk": 3, "sort": ("y", "desc")}, "Hard"),
    ("employees", "point", "salary", "none", "manager_id", {"color": "job_id"}, "Medium"),
    ("tourist_attractions", "bar", "how_to_get_there", "count", "how_to_get_there",
     {"group": "x", "sort": ("x", "asc")}, "Medium"),
    ("tourist_attractions", "arc", "how_to_get_there", "count", "how_to_get_there", {"group": "x"}, "Easy"),
    ("tourist_attractions", "line", "opening_date", "count", "opening_date", {"bin": "year"}, "Easy"),
    ("tourist_attractions", "bar", "name", "none", "visitors", {"sort": ("y", "desc"), "topk": 5}, "Hard"),
    ("tourist_attractions", "point", "opening_date", "none", "visitors", {}, "Easy"),
    ("tourist_attractions", "bar", "name", "none", "visitors",
     {"filter": ([("how_to_get_there", "=", "'bus'")], [])}, "Medium"),
    ("tourist_attractions", "arc", "name", "sum", "visitors",
     {"filter": ([("visitors", ">=", "1000")], []), "group": "x"}, "Hard"),
    ("tourist_attractions", "line", "opening_date", "sum", "visitors", {"bin": "month"}, "Medium"),
    ("tourist_attractions", "point", "name", "max", "visitors", {"group": "x"}, "Medium"),
    ("tourist_attractions", "bar", "how_to_get_there", "avg", "visitors", {"group": "x", "sort": ("y", "asc")}, "Medium"),
    ("apartment_bookings", "bar", "booking_start_date", "count", "booking_start_date",
     {"sort": ("y", "asc"), "bin": "weekday"}, "Medium"),
    ("apartment_bookings", "line", "booking_start_date", "count", "booking_start_date", {"bin": "month"}, "Easy"),
    ("apartment_bookings", "arc", "booking_status_code", "count", "booking_status_code", {"group": "x"}, "Easy"),
    ("apartment_bookings", "bar", "booking_status_code", "count", "booking_status_code",
     {"group": "x", "sort": ("x", "desc")}, "Medium"),
    ("apartment_bookings", "point", "apt_id", "none", "guest_id", {}, "Easy"),
    ("apartment_bookings", "line", "booking_start_date", "count", "booking_start_date",
     {"filter": ([("booking_status_code", "=", "'Confirmed'")], []), "bin": "year"}, "Hard"),
    ("apartment_bookings", "bar", "booking_start_date", "sum", "guest_id", {"bin": "day"}, "Medium"),
    ("apartment_bookings", "point", "apt_id", "count", "guest_id", {"group": "x"}, "Medium"),
    ("apartment_bookings", "arc", "booking_status_code", "sum", "apt_id", {"group": "x"}, "Medium"),
    ("customer", "bar", "cust_name", "none", "acc_bal",
     {"filter": ([("cust_name", "like", "'%a%'")], []), "sort": ("y", "desc")}, "Hard"),
    ("customer", "bar", "state", "count", "state", {"group": "x"}, "Easy"),
    ("customer", "arc", "state", "sum", "acc_bal", {"group": "x"}, "Medium"),
    ("customer", "point", "credit_score", "none", "acc_bal", {}, "Easy"),
    ("customer", "point", "credit_score", "none", "acc_bal", {"color": "state"}, "Medium"),
    ("customer", "bar", "state", "avg", "credit_score", {"group": "x", "sort": ("x", "asc")}, "Medium"),
    ("customer", "line", "cust_name", "none", "credit_score",
     {"filter": ([("acc_bal", "<", "5000"), ("state", "=", "'Ohio'")], ["and"])}, "Extra Hard"),
    ("customer", "bar", "cust_name", "none", "acc_bal", {"sort": ("y", "asc"), "topk": 3}, "Hard"),
    ("customer", "arc", "state", "max", "credit_score", {"group": "x"}, "Medium"),
    ("customer", "bar", "cust_name", "none", "credit_score",
     {"filter": ([("cust_name", "like", "'J%'"), ("credit_score", ">", "600")], ["or"])}, "Extra Hard"),
    ("products", "bar", "category", "count", "category", {"group": "x"}, "Easy"),
    ("products", "arc", "category", "count", "category", {"group": "x"}, "Easy"),
    ("products", "line", "launch_date", "count", "launch_date", {"bin": "quarter"}, "Medium"),
    ("products", "point", "product_name", "none", "price", {}, "Easy"),
    ("products", "bar", "category", "avg", "price", {"group": "x", "sort": ("y", "desc")}, "Medium"),
    ("products", "bar", "product_name", "none", "price",
     {"filter": ([("price", "between", "10", "50")], []), "sort": ("y", "asc")}, "Hard"),
    ("products", "line", "launch_date", "avg", "price", {"bin": "year"}, "Medium"),
    ("products", "arc", "category", "sum", "price",
     {"filter": ([("category", "!=", "'Garden'")], []), "group": "x"}, "Hard"),
    ("products", "point", "launch_date", "max", "price", {"bin": "month"}, "Hard"),
    ("products", "bar", "product_name", "none", "price", {"sort": ("y", "desc"), "topk": 10}, "Hard"),
    ("products", "line", "launch_date", "min", "price", {"color": "category", "bin": "year"}, "Extra Hard"),
    ("stadium", "bar", "name", "none", "capacity", {"sort": ("y", "desc")}, "Easy"),
    ("stadium", "point", "capacity", "none", "average", {}, "Easy"),
    ("stadium", "arc", "city", "count", "city", {"group": "x"}, "Easy"),
    ("stadium", "line", "opening_year", "none", "capacity", {"sort": ("x", "asc")}, "Medium"),
    ("stadium", "bar", "city", "sum", "capacity", {"group": "x", "sort": ("x", "desc")}, "Medium"),
    ("stadium", "point", "opening_year", "avg", "average", {"group": "x"}, "Medium"),
    ("stadium", "bar", "name", "none", "average",
     {"filter": ([("capacity", ">", "5000"), ("city", "=", "'Ayr'")], ["or"])}, "Extra Hard"),
    ("stadium", "arc", "city", "max", "capacity", {"group": "x"}, "Medium"),
    ("stadium", "line", "opening_year", "max", "average",
     {"filter": ([("capacity", "<=", "20000")], []), "group": "x"}, "Hard"),
]


def label_of(table, chart, x, agg, y, ex):
    parts = ["mark", chart, "data", table, "encoding", "x", x, "y", "aggregate", agg, y]
    if "color" in ex:
        parts += ["color", ex["color"]]
    t = []
    if "filter" in ex:
        preds, conns = ex["filter"]
        t.append("filter")
        for i, p in enumerate(preds):
            if i:
                t.append(conns[i - 1])
            if p[1] == "between":
                t += [p[0], "between", p[2], "and", p[3]]
            else:
                t += [p[0], p[1], p[2]]
    if "group" in ex:
        t += ["group", ex["group"]]
    if "sort" in ex:
        t += ["sort", ex["sort"][0], ex["sort"][1]]
    if "bin" in ex:
        t += ["bin", "x", "by", ex["bin"]]
    if "topk" in ex:
        t += ["topk", str(ex["topk"])]
    if t:
        parts += ["transform"] + t
    return " ".join(parts)


def predicate_phrase(p):
    col, op = h(p[0]), p[1]
    if op == "between":
        return f"{col} is between {p[2]} and {p[3]}"
    if op == "like":
        pat = p[2].strip("'")
        if pat.startswith("%") and pat.endswith("%"):
            return f"{col} contains the letter {pat.strip('%')}"
        return f"{col} starts with {pat.rstrip('%')}"
    value = p[2]
    if value == '"null"':
        return f"{col} is not null" if op == "!=" else f"{col} is null"
    return f"{col} {OP_PHRASE[op]} {value.strip(chr(39))}"


def nl_of(table, chart, x, agg, y, ex, variant):
    chart_p = CHART_PHRASE[chart]
    if agg == "count" and x == y:
        measure = f"how many records per {h(x)}"
    elif agg == "none":
        measure = f"{h(y)} against {h(x)}"
    else:
        measure = f"{AGG_PHRASE[agg]} {h(y)} per {h(x)}"
    openers = ["Show", "Draw", "Plot", "Give me"]
    s = f"{openers[variant % 4]} a {chart_p} of {measure} from the {h(table)} table"
    if "filter" in ex:
        preds, conns = ex["filter"]
        clause = predicate_phrase(preds[0])
        for i, p in enumerate(preds[1:]):
            clause += f" {conns[i]} {predicate_phrase(p)}"
        s = f"For {h(table)} where {clause}, " + s[0].lower() + s[1:]
    if "color" in ex:
        s += f", colored by {h(ex['color'])}"
    if "group" in ex:
        g = ex["group"]
        s += f", grouped by {h(x) if g == 'x' else h(g)}"
    if "bin" in ex:
        s += f", binned by {ex['bin']}"
    if "sort" in ex:
        axis, d = ex["sort"]
        s += f", sort the {axis.upper()} axis in {DIR_PHRASE[d]} order"
    if "topk" in ex:
        s += f", keep only the top {ex['topk']}"
    return s + " ."


def main():
    root = pathlib.Path(__file__).resolve().parent.parent / "data"
    assert len(Q) == 64, len(Q)
    labels = set()
    lines = []
    for i, (table, chart, x, agg, y, ex, hardness) in enumerate(Q):
        label = label_of(table, chart, x, agg, y, ex)
        assert label not in labels, label
        labels.add(label)
        cols = [{"name": n, "kind": k} for n, k in TABLES[table]["columns"]]
        rec = {
            "id": f"mini-{i:03d}",
            "nl": nl_of(table, chart, x, agg, y, ex, i),
            "label": label,
            "table": table,
            "schema": cols,
            "values": TABLES[table]["values"],
            "hardness": hardness,
            "split": "train",
        }
        lines.append(json.dumps(rec, ensure_ascii=False))
    (root / "mini_corpus.jsonl").write_text("\n".join(lines) + "\n")

    schema = {"tables": [{"name": t, "columns": [{"name": n, "kind": k} for n, k in d["columns"]],
                          "values": d["values"]} for t, d in TABLES.items()]}
    (root / "mini_schema.json").write_text(json.dumps(schema, indent=2) + "\n")


if __name__ == "__main__":
    main()
