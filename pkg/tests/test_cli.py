import json

import pytest

from quasilab import closure, congruence, freealg
from quasilab.cli import main
from terms import P_IMPL


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def run_json(capsys, *argv):
    code, out, _ = run(capsys, *argv, "--json")
    return code, json.loads(out)


def test_sc_kleene(capsys):
    code, out, _ = run(capsys, "sc", "-K", "corpus:kleene3")
    assert code == 0 and out.startswith("structurally_complete: no")
    assert "pair" in out


def test_primitive_impl_json(capsys):
    code, d = run_json(capsys, "primitive", "-K", "corpus:impl2")
    assert code == 0 and d["answer"] == "yes" and d["schema"] == "quasilab/1"


def test_check_term_impl(capsys):
    code, d = run_json(capsys, "check-term", "-K", "corpus:impl2", "--role", "dual-i-disc",
                       "--term", P_IMPL, "--verify")
    assert code == 0 and d["answer"] == "yes" and d["verified"] is True


@pytest.mark.parametrize("argv", [
    ["info", "corpus:m4"], ["con", "corpus:m3"], ["conq", "corpus:z4", "-K", "z4"],
    ["free", "-K", "lat2", "-n", "3"], ["derivable", "-K", "z4", "add(x,x)=zero => x=zero"],
    ["admissible", "-K", "z4", "add(x,x)=zero => x=zero"], ["sc", "-K", "impl2"],
    ["core", "-K", "z4", "z2"], ["exact", "-K", "m3", "m2", "--max-vars", "1"],
    ["char", "-K", "z2", "z2"], ["projective", "-K", "m2", "m2"], ["wproj", "-K", "m3", "m3"],
    ["primitive", "-K", "lat2"], ["csc", "-K", "heyting3", "--clone", "meet(x,y); imp(x,y)"],
    ["upresent", "-K", "heyting3", "--clone", "meet(x,y); join(x,y)"],
    ["check-term", "-K", "m3", "--role", "rpip", "--term",
     "meet(x,neg(x))", "--term", "meet(x,neg(x))"],
    ["check-term", "-K", "twist3", "--role", "rtpip", "--term", "p(x,y,z)"],
    ["check-term", "-K", "bool2", "--role", "td", "--term", "join(join(meet(x,neg(y)),meet(neg(x),y)),z)"],
    ["check-term", "-K", "impl2", "--role", "prucnal", "--term", "imp(imp(x,y), imp(imp(y,x), z))"],
    ["check-term", "-K", "z4", "--role", "subtraction", "--term", "add(x,neg(y))"],
    ["check-term", "-K", "bool2", "--role", "zero-regular", "--term", "join(meet(x,neg(y)),meet(neg(x),y))"],
    ["check-term", "-K", "bool2", "--role", "u-term", "--term", "meet(x,neg(y))"],
    ["check-term", "-K", "impl2", "--role", "fixedpoint", "--kind", "p", "--term", P_IMPL,
     "--point", "imp(z,z)"],
    ["synth-discriminator", "-K", "twist3", "--rtpip", "p(x,y,z)"],
    ["ideals", "-K", "z4", "--term", "add(x,neg(y))"],
    ["filtral", "-K", "m2", "-K", "m2", "--projection", "1"],
    ["filtral", "-K", "z2", "-K", "z2", "--kernel-term", "add(x0,x1)"],
    ["corpus"], ["corpus", "fano"],
])
def test_text_and_json_agree(capsys, argv):
    code, out, _ = run(capsys, *argv, "--verify")
    code2, d = run_json(capsys, *argv, "--verify")
    assert code == code2 == 0
    assert out.split("\n")[0].endswith(d["answer"])
    assert d["verified"] is True
    assert "verified: yes" in out


def test_budget_gives_unknown(capsys):
    old = freealg.DEFAULT_SIZE_CAP
    try:
        code, d = run_json(capsys, "sc", "-K", "m3", "--budget", "free_size=3")
    finally:
        freealg.DEFAULT_SIZE_CAP = old
    assert code == 2 and d["answer"] == "unknown" and d["budget"] == "free_size"


def test_work_budget_gives_unknown(capsys):
    old = closure.WORK_LIMIT
    try:
        code, d = run_json(capsys, "sc", "-K", "chain3", "--budget", "free_work=1000")
    finally:
        closure.WORK_LIMIT = old
    assert code == 2 and d["answer"] == "unknown"


def test_deep_raises_caps(capsys):
    from quasilab.cli import BUDGETS
    old = {k: getattr(mod, attr) for k, (mod, attr) in BUDGETS.items()}
    try:
        run(capsys, "info", "z2", "--deep")
        assert congruence.LATTICE_CAP == 50 * old["lattice_size"]
        assert closure.WORK_LIMIT == 50 * old["free_work"]
    finally:
        for k, (mod, attr) in BUDGETS.items():
            setattr(mod, attr, old[k])


@pytest.mark.parametrize("argv", [
    ["sc", "-K", "nosuch"], ["sc", "-K", "m3", "--budget", "bogus=1"],
    ["derivable", "-K", "z4", "add(x,=zero"], ["sc"],
    ["check-term", "-K", "impl2", "--role", "rpip", "--term", "x"],
])
def test_errors_exit_one(capsys, argv):
    code, _, err = run(capsys, *argv)
    assert code == 1 and "error" in err


def test_usage_error_exit_one(capsys):
    with pytest.raises(SystemExit) as e:
        main(["nosuchverb"])
    assert e.value.code == 1


def test_json_error_report(capsys):
    code, d = run_json(capsys, "sc", "-K", "nosuch")
    assert code == 1 and d["answer"] == "error"


def test_plot_and_export(capsys, tmp_path):
    png = tmp_path / "con.png"
    code, d = run_json(capsys, "con", "m4", "--plot", str(png))
    assert code == 0 and png.stat().st_size > 0
    out = tmp_path / "free.alg"
    code, d = run_json(capsys, "free", "-K", "lat2", "-n", "2", "--export", str(out))
    assert code == 0 and out.exists() and (tmp_path / "free.alg.json").exists()
    code, d = run_json(capsys, "info", str(out))
    assert d["witness"]["size"] == 4


def test_file_selector(capsys, tmp_path):
    f = tmp_path / "two.alg"
    f.write_text("algebra a\nelements 0 1\nop g/1\n1 0\nend\n"
                 "algebra b\nelements 0 1\nop g/1\n0 1\nend\n")
    code, _, err = run(capsys, "info", str(f))
    assert code == 1 and "#name" in err
    code, d = run_json(capsys, "info", f"{f}#b")
    assert code == 0 and d["inputs"]["algebra"] == "b"
