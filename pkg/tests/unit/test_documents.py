import pytest

from exteam.exceptions import ConfigError, ModelError, PolicyError
from exteam.models import MixtureTag
from exteam.services.documents import (
    KernelDoc,
    kernel_from_document,
    kernel_to_document,
    load_mixture,
    load_problem,
    mixture_from_document,
    mixture_to_document,
    parse_mixture,
    parse_problem,
    read_document,
    team_from_document,
)
from exteam.services.evaluation import expected_cost_dynamic, expected_cost_static_exact
from exteam.services.policy_space import Mixture, PolicyProfile, RelaxedKernel, symmetrize
from exteam.services.team_model import DynamicTeam, StaticTeam


def _dynamic_doc() -> dict:
    """x_{t+1} = u_t, y_t = x_t, 단계 비용 (ū − ½)²."""
    return {
        "omega0": {"labels": ["w0"], "prior": [1.0]},
        "obs": {"labels": ["0", "1"]},
        "actions": {"labels": ["0", "1"], "values": [0, 1]},
        "states": {"labels": ["0", "1"], "values": [0, 1]},
        "cost": {"kind": "mean_field_quadratic", "params": {"target": 0.5}},
        "N": 2,
        "horizon": 2,
        "init_kernel": [[1.0, 0.0]],
        "dyn_noise": {"labels": ["w"], "probs": [1.0]},
        "obs_noise": {"labels": ["v"], "probs": [1.0]},
        "dynamics_table": [[[["0"], ["1"]], [["0"], ["1"]]]] * 2,
        "obs_table": [[["0"], ["1"]]] * 2,
    }


class TestReadDocument:
    def test_invalid_json_reports_position(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text('{"N": 2,\n  "obs": }', encoding="utf-8")
        with pytest.raises(ConfigError, match="line 2, column"):
            read_document(path)

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigError, match="cannot read"):
            read_document(tmp_path / "nope.json")

    def test_top_level_must_be_object(self, write_json):
        with pytest.raises(ConfigError, match="JSON object"):
            read_document(write_json("list.json", [1, 2]))


class TestProblemDocument:
    def test_example_one(self, example_one_doc, bernoulli_half):
        team = team_from_document(parse_problem(example_one_doc))
        assert isinstance(team, StaticTeam)
        assert team.num_dms == 2
        assert expected_cost_static_exact(team, Mixture.iid(bernoulli_half, 2)).value == (
            pytest.approx(0.125)
        )

    def test_load_from_file(self, example_one_doc, write_json):
        team = load_problem(write_json("p.json", example_one_doc))
        assert team.actions.labels == ("0", "1")

    def test_numeric_labels_become_strings(self, example_one_doc):
        example_one_doc["actions"]["labels"] = [0, 1]
        doc = parse_problem(example_one_doc)
        assert doc.actions.labels == ["0", "1"]

    def test_missing_field_names_path(self, example_one_doc):
        del example_one_doc["cost"]
        with pytest.raises(ConfigError, match="field 'cost'"):
            parse_problem(example_one_doc)

    def test_unknown_field_rejected(self, example_one_doc):
        example_one_doc["extra"] = 1
        with pytest.raises(ConfigError, match="extra"):
            parse_problem(example_one_doc)

    def test_unknown_cost_kind(self, example_one_doc):
        example_one_doc["cost"]["kind"] = "cubic"
        with pytest.raises(ConfigError, match="cost.kind"):
            parse_problem(example_one_doc)

    def test_nonpositive_n(self, example_one_doc):
        example_one_doc["N"] = 0
        with pytest.raises(ConfigError, match="field 'N'"):
            parse_problem(example_one_doc)

    def test_prior_required(self, example_one_doc):
        del example_one_doc["omega0"]["prior"]
        with pytest.raises(ConfigError, match="omega0.prior"):
            parse_problem(example_one_doc)

    def test_static_needs_obs_kernel(self, example_one_doc):
        del example_one_doc["obs_kernel"]
        with pytest.raises(ConfigError, match="obs_kernel"):
            parse_problem(example_one_doc)

    def test_prior_must_sum_to_one(self, example_one_doc):
        example_one_doc["omega0"]["prior"] = [0.7]
        with pytest.raises(ModelError, match="prior"):
            team_from_document(parse_problem(example_one_doc))

    def test_per_omega_targets(self, example_one_doc):
        example_one_doc["omega0"] = {"labels": ["lo", "hi"], "prior": [0.5, 0.5]}
        example_one_doc["obs_kernel"] = [[1.0], [1.0]]
        example_one_doc["cost"]["params"]["target"] = [0.0, 1.0]
        team = team_from_document(parse_problem(example_one_doc))
        assert team.joint_cost("lo", [0, 0]) == 0.0
        assert team.joint_cost("hi", [0, 0]) == 1.0

    def test_target_list_length(self, example_one_doc):
        example_one_doc["cost"]["params"]["target"] = [0.0, 1.0]
        with pytest.raises(ConfigError, match="one entry per omega0"):
            team_from_document(parse_problem(example_one_doc))

    def test_constant_cost(self, example_one_doc):
        example_one_doc["cost"] = {"kind": "constant", "params": {"value": 2.0}}
        team = team_from_document(parse_problem(example_one_doc))
        assert team.joint_cost("w0", [0, 1]) == 2.0

    def test_table_cost(self, example_one_doc):
        example_one_doc["cost"] = {
            "kind": "table",
            "params": {"table": [[[0.0, 1.0], [2.0, 3.0]]]},
        }
        team = team_from_document(parse_problem(example_one_doc))
        assert not team.is_mean_field
        assert team.joint_cost("w0", ["1", "0"]) == 2.0

    def test_table_cost_shape(self, example_one_doc):
        example_one_doc["cost"] = {"kind": "table", "params": {"table": [[0.0, 1.0]]}}
        with pytest.raises(ConfigError, match="expected"):
            team_from_document(parse_problem(example_one_doc))

    def test_ragged_table(self, example_one_doc):
        example_one_doc["cost"] = {"kind": "table", "params": {"table": [[[0.0, 1.0], [2.0]]]}}
        with pytest.raises(ConfigError, match="cost.params.table"):
            team_from_document(parse_problem(example_one_doc))

    def test_table_cost_required(self, example_one_doc):
        example_one_doc["cost"] = {"kind": "table", "params": {}}
        with pytest.raises(ConfigError, match="table is required"):
            team_from_document(parse_problem(example_one_doc))


class TestDynamicDocument:
    def test_builds_dynamic_team(self):
        team = team_from_document(parse_problem(_dynamic_doc()))
        assert isinstance(team, DynamicTeam)
        assert team.horizon == 2
        P = Mixture.iid(RelaxedKernel.uniform(2, 2, horizon=2), 2)
        assert expected_cost_dynamic(team, P).value == pytest.approx(0.25)

    def test_missing_dynamic_fields(self):
        doc = _dynamic_doc()
        del doc["obs_table"]
        del doc["init_kernel"]
        with pytest.raises(ConfigError, match="init_kernel, obs_table"):
            parse_problem(doc)

    def test_noise_probs_required(self):
        doc = _dynamic_doc()
        del doc["dyn_noise"]["probs"]
        with pytest.raises(ConfigError, match="dyn_noise.probs"):
            parse_problem(doc)

    def test_dynamics_table_shape(self):
        doc = _dynamic_doc()
        doc["dynamics_table"] = doc["dynamics_table"][:1]
        with pytest.raises(ConfigError, match="dynamics_table has shape"):
            team_from_document(parse_problem(doc))

    def test_unknown_state_label(self):
        doc = _dynamic_doc()
        doc["dynamics_table"] = [[[["0"], ["7"]], [["0"], ["1"]]]] * 2
        with pytest.raises(ConfigError, match="unknown labels"):
            team_from_document(parse_problem(doc))

    def test_state_penalty(self):
        doc = _dynamic_doc()
        doc["cost"]["params"] = {"target": 0.5, "scale": 0.0, "state_penalty": 1.0,
                                 "state_target": 1.0}
        team = team_from_document(parse_problem(doc))
        assert team.stage_cost_checked("w0", 0.0, 0.0, 0.0, 0.0) == 1.0

    def test_tabulated_stage_cost(self):
        doc = _dynamic_doc()
        doc["cost"] = {"kind": "table", "params": {"table": [[[0.0, 1.0], [2.0, 3.0]]]}}
        team = team_from_document(parse_problem(doc))
        assert team.stage_cost_checked("w0", 1.0, 0.0, 0.5, 0.5) == 2.0


class TestKernelDocument:
    def test_map_form(self, example_one):
        kernel = kernel_from_document(KernelDoc(map={"none": "1"}), example_one)
        assert kernel.is_deterministic
        assert kernel.rows.tolist() == [[[0.0, 1.0]]]

    def test_map_must_be_total(self):
        team = team_from_document(parse_problem(_dynamic_doc()))
        with pytest.raises(PolicyError, match="not total"):
            kernel_from_document(KernelDoc(map=[{"0": "1"}, {"0": "1", "1": "0"}]), team)

    def test_map_stage_count(self):
        team = team_from_document(parse_problem(_dynamic_doc()))
        with pytest.raises(PolicyError, match="stages"):
            kernel_from_document(KernelDoc(map={"0": "1", "1": "0"}), team)

    def test_numeric_rows(self, example_one):
        kernel = kernel_from_document(KernelDoc(rows=[[0.5, 0.5]]), example_one)
        assert kernel.shape == (1, 1, 2)

    def test_label_dict_rows(self, example_one):
        kernel = kernel_from_document(KernelDoc(rows={"none": {"1": 1.0}}), example_one)
        assert kernel.rows.tolist() == [[[0.0, 1.0]]]

    def test_non_numeric_rows(self, example_one):
        with pytest.raises(PolicyError, match="numeric"):
            kernel_from_document(KernelDoc(rows=[["a", "b"]]), example_one)

    def test_exactly_one_form(self):
        with pytest.raises(ValueError):
            KernelDoc(rows=[[1.0]], map={"y": "u"})


class TestMixtureDocument:
    def test_iid_recipe(self, example_one):
        P = mixture_from_document(parse_mixture({"iid": {"rows": [[0.5, 0.5]]}}), example_one)
        assert P.tag is MixtureTag.PR_SYM
        assert P.n_dms == 2

    def test_atoms_with_tag(self, example_one):
        doc = {
            "tag": "ex",
            "atoms": [
                {"weight": 0.5, "profile": [{"map": {"none": "0"}}, {"map": {"none": "1"}}]},
                {"weight": 0.5, "profile": [{"map": {"none": "1"}}, {"map": {"none": "0"}}]},
            ],
        }
        P = mixture_from_document(parse_mixture(doc), example_one)
        assert P.tag is MixtureTag.EX
        assert expected_cost_static_exact(example_one, P).value == 0.0

    def test_false_tag_rejected(self, example_one):
        doc = {
            "tag": "ex",
            "atoms": [{"weight": 1.0, "profile": [{"map": {"none": "0"}}, {"map": {"none": "1"}}]}],
        }
        with pytest.raises(PolicyError, match="does not hold"):
            mixture_from_document(parse_mixture(doc), example_one)

    def test_common_randomness_not_loadable(self, example_one):
        doc = {"tag": "co_sym", "atoms": [{"weight": 1.0, "profile": [{"rows": [[0.5, 0.5]]}] * 2}]}
        with pytest.raises(PolicyError, match="built in code"):
            mixture_from_document(parse_mixture(doc), example_one)

    def test_needs_one_form(self):
        with pytest.raises(ConfigError, match="exactly one"):
            parse_mixture({"tag": "general"})

    def test_unknown_tag(self):
        with pytest.raises(ConfigError, match="field 'tag'"):
            parse_mixture({"tag": "weird", "iid": {"rows": [[1.0, 0.0]]}})

    def test_load_from_file(self, example_one, write_json):
        path = write_json("policy.json", {"iid": {"map": {"none": "1"}}})
        P = load_mixture(path, example_one)
        assert P.support == [PolicyProfile.iid(RelaxedKernel.constant(1, 1, 2), 2)]


class TestSerialization:
    def test_deterministic_kernel_as_map(self, example_one, const1):
        assert kernel_to_document(const1, example_one) == {"map": [{"none": "1"}]}

    def test_relaxed_kernel_as_rows(self, example_one, bernoulli_half):
        assert kernel_to_document(bernoulli_half, example_one) == {"rows": [[[0.5, 0.5]]]}

    def test_document_reloads_to_same_law(self, example_one, const0, const1):
        P = symmetrize(Mixture.dirac(PolicyProfile.of(const0, const1)))
        doc = mixture_to_document(P, example_one)
        assert doc["tag"] == "ex"
        assert mixture_from_document(parse_mixture(doc), example_one).same_law(P)
