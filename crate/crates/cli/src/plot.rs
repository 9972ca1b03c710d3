//! `lcu plot-script`: a matplotlib script that draws a figure from the CSVs
//! the figure commands write. Plotting stays outside the binary.

use clap::ValueEnum;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Figure {
    Fig2,
    Fig3,
    Fig4,
}

const FIG2: &str = r##"import sys
import numpy as np
import matplotlib.pyplot as plt

path = sys.argv[1] if len(sys.argv) > 1 else "fig2.csv"
d = np.genfromtxt(path, delimiter=",", names=True, comments="#")
plt.plot(d["a"], d["p00_sim"], "o", label="p00 simulated")
plt.plot(d["a"], d["p00_analytic"], "-", label="p00 analytic")
plt.plot(d["a"], d["p0any_sim"], "s", label="p(first qubit 0)")
plt.plot(d["a"], d["p_std_analytic"], "--", label="standard LCU")
plt.xlabel("a")
plt.ylabel("success probability")
plt.legend()
plt.savefig(path.rsplit(".", 1)[0] + ".png", dpi=150)
"##;

const SWEEP: &str = r##"import sys
import numpy as np
import matplotlib.pyplot as plt

paths = sys.argv[1:] or ["__NAME___N256.csv", "__NAME___N1024.csv"]
for path in paths:
    d = np.genfromtxt(path, delimiter=",", names=True, comments="#", dtype=None, encoding="utf-8")
    for m in sorted(set(d["method"])):
        r = d[d["method"] == m]
        plt.errorbar(r["param"], r["mean_err_phi"], yerr=r["std_err_phi"], marker="o",
                     label=f"{m} ({path})")
plt.xlabel("__XLABEL__")
plt.ylabel("relative error")
__XSCALE__plt.yscale("log")
plt.legend()
plt.savefig("__NAME__.png", dpi=150)
"##;

pub fn script(fig: Figure) -> String {
    match fig {
        Figure::Fig2 => FIG2.to_string(),
        Figure::Fig3 => SWEEP
            .replace("__NAME__", "fig3")
            .replace("__XLABEL__", "observed fraction")
            .replace("__XSCALE__", ""),
        Figure::Fig4 => SWEEP
            .replace("__NAME__", "fig4")
            .replace("__XLABEL__", "noise sigma")
            .replace("__XSCALE__", "plt.xscale(\"log\")\n"),
    }
}
