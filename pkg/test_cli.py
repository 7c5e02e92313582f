import io
import json

import pytest

from cli import Command, build_parser, main

PRIME = "z1*z2*zb1 + z1*zb1*zb2 + 3*(z1^2*zb2 + z2*zb1^2)"
R_HALF = "z1*z2*zb1 + z1*zb1*zb2 + (1/2)*(z1^2*zb2 + z2*zb1^2)"


@pytest.fixture
def write(tmp_path):
    def _write(name, text):
        path = tmp_path / name
        path.write_text(text, encoding='utf-8')
        return str(path)
    return _write


def test_parser_defaults():
    args = build_parser().parse_args(['classify', 'a.txt'])
    cmd = Command(**vars(args))
    assert cmd.verb == 'classify'
    assert cmd.inputs == ['a.txt']
    assert cmd.output_format == 'text'
    assert not cmd.opportunistic


def test_classify_text_report(write, capsys):
    code = main(['classify', write('v.txt', PRIME), '--order', '4'])
    out = capsys.readouterr().out.splitlines()
    assert code == 0
    assert out[0] == "A'.ii.1"
    assert 'Δ12 = 6' in out
    assert 'r = 3' in out


def test_classify_excluded_exit_code(write, capsys):
    code = main(['classify', write('v.txt', R_HALF), '--order', '4', '--format', 'structured'])
    captured = capsys.readouterr()
    assert code == 2
    assert json.loads(captured.out)['tag'] == 'Excluded_r_half'
    assert '1/2' in captured.err


def test_reads_standard_input(monkeypatch, capsys):
    monkeypatch.setattr('sys.stdin', io.StringIO(PRIME))
    assert main(['levi', '-', '--order', '4', '--format', 'structured']) == 0
    out = json.loads(capsys.readouterr().out)
    assert out['rank_at_origin'] == 0
    assert out['delta12'] == '6'
    assert out['span_dimension'] == 2


@pytest.mark.parametrize("argv", [
    ['classify'],
    ['classify', 'nao-existe.txt'],
    ['model'],
    ['model', '--tag', 'B.i'],
])
def test_user_errors_exit_with_one(argv, capsys):
    assert main(argv) == 1
    assert capsys.readouterr().err


def test_parse_error_is_reported(write, capsys):
    assert main(['classify', write('v.txt', 'z1 + @'), '--order', '4']) == 1
    assert 'z1' not in capsys.readouterr().out


def test_normalize_requires_order_six(write, capsys):
    assert main(['normalize', write('v.txt', PRIME), '--order', '4']) == 1
    assert '--order' in capsys.readouterr().err


def test_model_with_parameters(capsys):
    code = main(['model', '--tag', 'A.ii.3', '--param', 'lambda=1+2*I', '--order', '4', '--format', 'structured'])
    out = json.loads(capsys.readouterr().out)
    assert code == 0
    assert out['tag'] == 'A.ii.3'
    assert 'z2^2*zb2' in out['series']


def test_model_rejects_unknown_parameter(capsys):
    assert main(['model', "A'.ii.1", '--param', 'k=2']) == 1


def test_recurrence_single_index(capsys):
    assert main(['recurrence', '--index', '1.0.1.0.0', '--format', 'structured']) == 0
    out = json.loads(capsys.readouterr().out)
    assert out['relations'][0]['index'] == '1.0.1.0.0'
    assert out['relations'][0]['relation'].startswith('varpi_Z1Zb1')


def test_recurrence_lists_second_order(capsys):
    assert main(['recurrence']) == 0
    assert len(capsys.readouterr().out.splitlines()) == 3


@pytest.mark.slow
def test_equiv_distinguishes_r(write, capsys):
    a = write('a.txt', PRIME)
    b = write('b.txt', "z1*z2*zb1 + z1*zb1*zb2 + 2*(z1^2*zb2 + z2*zb1^2)")
    assert main(['equiv', a, b, '--order', '6']) == 0
    out = capsys.readouterr().out.splitlines()
    assert out[0] == 'No'
    assert 'diferenças: r' in out
