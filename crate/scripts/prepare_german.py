#!/usr/bin/env python3
"""Convert the UCI Statlog German Credit file into CSV + schema sidecar.

Usage: python3 scripts/prepare_german.py [raw german.data] [output dir]

The raw file uses coded categorical values (A11, A12, ...). They are decoded
to the readable labels from the UCI documentation. Age becomes the binary
sensitive attribute: 'old' (> 30 years, privileged) vs 'young'. A `sex`
column is derived from the personal status code.
"""
import csv
import json
import os
import sys

CODES = {
    "status_chec_acc": {
        "A11": "<0 DM",
        "A12": "0 <= .. < 200 DM",
        "A13": ">= 200 DM / salary for at least 1 year",
        "A14": "no checking account",
    },
    "cred_hist": {
        "A30": "no credits taken / all credits paid back duly",
        "A31": "all credits at this bank paid back duly",
        "A32": "existing credits paid back duly till now",
        "A33": "delay in paying off in the past",
        "A34": "critical account / other credits existing (not at this bank)",
    },
    "purpose": {
        "A40": "car (new)",
        "A41": "car (used)",
        "A42": "furniture/equipment",
        "A43": "radio/television",
        "A44": "domestic appliances",
        "A45": "repairs",
        "A46": "education",
        "A47": "vacation",
        "A48": "retraining",
        "A49": "business",
        "A410": "others",
    },
    "savings": {
        "A61": "< 100 DM",
        "A62": "100 <= .. < 500 DM",
        "A63": "500 <= .. < 1000 DM",
        "A64": ">= 1000 DM",
        "A65": "unknown / no savings account",
    },
    "employment": {
        "A71": "unemployed",
        "A72": "< 1 year",
        "A73": "1 <= .. < 4 years",
        "A74": "4 <= .. < 7 years",
        "A75": ">= 7 years",
    },
    "status_and_sex": {
        "A91": "male: divorced/separated",
        "A92": "female: divorced/separated/married",
        "A93": "male: single",
        "A94": "male: married/widowed",
        "A95": "female: single",
    },
    "debtors": {"A101": "none", "A102": "co-applicant", "A103": "guarantor"},
    "property": {
        "A121": "real estate",
        "A122": "building society savings agreement / life insurance",
        "A123": "car or other",
        "A124": "unknown / no property",
    },
    "install_plans": {"A141": "bank", "A142": "stores", "A143": "none"},
    "housing": {"A151": "rent", "A152": "own", "A153": "for free"},
    "job": {
        "A171": "unemployed / unskilled - non-resident",
        "A172": "unskilled - resident",
        "A173": "skilled employee / official",
        "A174": "management / self-employed / highly qualified employee / officer",
    },
    "telephone": {"A191": "none", "A192": "yes"},
    "foreign_worker": {"A201": "yes", "A202": "no"},
}

COLUMNS = [
    "status_chec_acc", "duration", "cred_hist", "purpose", "cred_amt",
    "savings", "employment", "installment_rate", "status_and_sex", "debtors",
    "present_resi_since", "property", "age", "install_plans", "housing",
    "num_credits", "job", "num_people_liable_to_maint", "telephone",
    "foreign_worker", "credit",
]

CONTINUOUS = {
    "duration", "cred_amt", "installment_rate", "present_resi_since",
    "num_credits", "num_people_liable_to_maint",
}


def main():
    here = os.path.dirname(os.path.abspath(__file__))
    raw = sys.argv[1] if len(sys.argv) > 1 else os.path.join(here, "..", "data", "raw", "german.data")
    out = sys.argv[2] if len(sys.argv) > 2 else os.path.join(here, "..", "data")

    rows = []
    with open(raw) as fh:
        for line in fh:
            parts = line.split()
            if not parts:
                continue
            rec = dict(zip(COLUMNS, parts))
            row = {}
            for name in COLUMNS:
                value = rec[name]
                if name in CODES:
                    value = CODES[name][value]
                elif name == "age":
                    value = "old" if int(value) > 30 else "young"
                elif name == "credit":
                    value = "good" if value == "1" else "bad"
                row[name] = value
            row["sex"] = "female" if rec["status_and_sex"] in ("A92", "A95") else "male"
            rows.append(row)

    header = [c for c in COLUMNS if c != "credit"] + ["sex", "credit"]
    with open(os.path.join(out, "german_credit.csv"), "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=header, lineterminator="\n")
        w.writeheader()
        w.writerows(rows)

    attributes = []
    for name in header[:-1]:
        if name in CONTINUOUS:
            attributes.append({"name": name, "kind": "continuous"})
        elif name == "age":
            attributes.append({"name": name, "kind": "categorical", "domain": ["young", "old"]})
        elif name == "sex":
            attributes.append({"name": name, "kind": "categorical", "domain": ["female", "male"]})
        else:
            attributes.append({"name": name, "kind": "categorical", "domain": list(CODES[name].values())})
    schema = {
        "attributes": attributes,
        "sensitive_attribute": "age",
        "privileged_value": "old",
        "label_column": "credit",
        "positive_label": "good",
    }
    with open(os.path.join(out, "german_credit.schema.json"), "w") as fh:
        json.dump(schema, fh, indent=2)
        fh.write("\n")
    print(f"wrote {len(rows)} rows, {len(attributes)} attributes")


if __name__ == "__main__":
    main()
