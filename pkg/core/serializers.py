"""
Kernel files: one self-describing JSON document per instance.

The envelope names the instance and its header (alphabets, dimensions or
generators); every entry of ``kernels`` is validated by the serializer of
that instance and becomes a :class:`core.kernels.Kernel`.
"""
from dataclasses import dataclass, field
from fractions import Fraction

from rest_framework import serializers
from rest_framework.exceptions import ParseError as JSONParseError
from rest_framework.parsers import JSONParser
from rest_framework.renderers import JSONRenderer

from .exceptions import DibiError, KernelFileError
from .finrel import FinRel, RelTable
from .finstoch import Dist, FinStoch, Memory, StochTable
from .gauss import Gauss
from .kernels import Kernel, embed
from .markov import Assignment
from .synvar import INPUT, Gen, SynVar, elaborate, graph_to_term, parse_term, render_term
from .varspace import set_to_list, varset

INSTANCES = ('finstoch', 'finrel', 'gauss', 'synvar')


class VariableListField(serializers.ListField):
    """A duplicate-free list of valid variable names."""
    child = serializers.CharField()

    def to_internal_value(self, data):
        names = super().to_internal_value(data)
        try:
            varset(names)
        except DibiError as exc:
            raise serializers.ValidationError(str(exc))
        if len(set(names)) != len(names):
            raise serializers.ValidationError("variables repeat")
        return names


class ProbabilityField(serializers.Field):
    """An exact probability written as ``"n/d"`` (or an integer)."""

    def to_internal_value(self, data):
        if isinstance(data, float):
            raise serializers.ValidationError("probabilities are exact: write them as \"n/d\"")
        try:
            value = Fraction(str(data))
        except (ValueError, ZeroDivisionError):
            raise serializers.ValidationError(f"{data!r} is not a fraction")
        if not 0 <= value <= 1:
            raise serializers.ValidationError(f"{value} is not a probability")
        return value

    def to_representation(self, value):
        return str(Fraction(value))


class MemoryField(serializers.DictField):
    child = serializers.CharField()

    def to_internal_value(self, data):
        return Memory(super().to_internal_value(data))

    def to_representation(self, value):
        return {name: value[name] for name in set_to_list(value)}


class GeneratorSerializer(serializers.Serializer):
    dom = VariableListField()
    cod = VariableListField()


class KernelSerializer(serializers.Serializer):
    """
    Fields shared by every instance; subclasses turn the payload into the
    kernel's core.
    """
    dom = VariableListField()
    cod = VariableListField()

    @property
    def category(self):
        return self.context['category']

    def validate(self, attrs):
        dom, cod = frozenset(attrs['dom']), frozenset(attrs['cod'])
        if not dom <= cod:
            raise serializers.ValidationError({'dom': f"{sorted(dom - cod)} missing from cod"})
        try:
            core = self.build_core(attrs, set_to_list(dom), set_to_list(cod - dom))
            attrs['kernel'] = Kernel(dom, cod, core, self.category)
        except DibiError as exc:
            raise serializers.ValidationError(str(exc))
        return attrs

    def build_core(self, attrs, dom, fresh):
        raise NotImplementedError

    def to_representation(self, kernel):
        return {'dom': list(kernel.dom_list), 'cod': list(kernel.cod_list), **self.payload(kernel)}

    def payload(self, kernel):
        raise NotImplementedError

    def memory(self, memory, names, where):
        """Check ``memory`` binds exactly ``names`` within their alphabets."""
        if memory.variables != frozenset(names):
            raise serializers.ValidationError(
                f"{where} binds {sorted(memory.variables)}, expected {sorted(names)}"
            )
        for name in names:
            if memory[name] not in self.category.alphabet(name):
                raise serializers.ValidationError(f"{where}: {memory[name]!r} is not a value of {name}")
        return memory


class FinStochOutcomeSerializer(serializers.Serializer):
    memory = MemoryField()
    p = ProbabilityField()


class FinStochRowSerializer(serializers.Serializer):
    input = MemoryField()
    output = FinStochOutcomeSerializer(many=True)


class FinStochKernelSerializer(KernelSerializer):
    """
    Rows list, per input memory, a distribution over memories of the whole
    codomain; each output memory must agree with its input.
    """
    rows = FinStochRowSerializer(many=True)

    def build_core(self, attrs, dom, fresh):
        cod = dom + fresh
        table = {}
        for index, row in enumerate(attrs['rows']):
            given = self.memory(row['input'], dom, f"rows/{index}/input")
            key = given.as_tuple(dom)
            if key in table:
                raise serializers.ValidationError(f"rows/{index}: input {given!r} appears twice")
            weights = []
            for position, outcome in enumerate(row['output']):
                where = f"rows/{index}/output/{position}"
                memory = self.memory(outcome['memory'], cod, where)
                if memory.restrict(dom) != given:
                    raise serializers.ValidationError(f"{where}: output does not preserve the input")
                weights.append((memory.as_tuple(fresh), outcome['p']))
            table[key] = Dist(weights)
        return self.category.validate(StochTable(dom, fresh, table))

    def payload(self, kernel):
        category, dom, fresh = self.category, kernel.dom_list, set_to_list(kernel.fresh)
        rows = []
        for a in category.tuples(dom):
            given = Memory.from_tuple(dom, a)
            rows.append({
                'input': MemoryField().to_representation(given),
                'output': [
                    {
                        'memory': MemoryField().to_representation(given.merge(Memory.from_tuple(fresh, o))),
                        'p': str(w),
                    }
                    for o, w in sorted(kernel.core.rows[a].items())
                ],
            })
        return {'rows': rows}


class FinRelRowSerializer(serializers.Serializer):
    input = MemoryField()
    outputs = serializers.ListField(child=MemoryField(), allow_empty=False)


class FinRelKernelSerializer(KernelSerializer):
    rows = FinRelRowSerializer(many=True)

    def build_core(self, attrs, dom, fresh):
        cod = dom + fresh
        table = {}
        for index, row in enumerate(attrs['rows']):
            given = self.memory(row['input'], dom, f"rows/{index}/input")
            key = given.as_tuple(dom)
            if key in table:
                raise serializers.ValidationError(f"rows/{index}: input {given!r} appears twice")
            image = set()
            for position, memory in enumerate(row['outputs']):
                where = f"rows/{index}/outputs/{position}"
                memory = self.memory(memory, cod, where)
                if memory.restrict(dom) != given:
                    raise serializers.ValidationError(f"{where}: output does not preserve the input")
                image.add(memory.as_tuple(fresh))
            table[key] = frozenset(image)
        return self.category.validate(RelTable(dom, fresh, table))

    def payload(self, kernel):
        dom, fresh = kernel.dom_list, set_to_list(kernel.fresh)
        rows = []
        for a in self.category.tuples(dom):
            given = Memory.from_tuple(dom, a)
            rows.append({
                'input': MemoryField().to_representation(given),
                'outputs': [
                    MemoryField().to_representation(given.merge(Memory.from_tuple(fresh, o)))
                    for o in sorted(kernel.core.rows[a])
                ],
            })
        return {'rows': rows}


class GaussKernelSerializer(KernelSerializer):
    """``M``, ``cov`` and ``mean`` of the map from ``dom`` to ``cod ∖ dom``."""
    M = serializers.ListField(child=serializers.ListField(child=serializers.FloatField(), allow_empty=True),
                              allow_empty=True)
    cov = serializers.ListField(child=serializers.ListField(child=serializers.FloatField(), allow_empty=True),
                                allow_empty=True)
    mean = serializers.ListField(child=serializers.FloatField(), allow_empty=True)

    def build_core(self, attrs, dom, fresh):
        try:
            return self.category.make(dom, fresh, attrs['M'], attrs['cov'], attrs['mean'])
        except ValueError as exc:
            raise serializers.ValidationError(f"matrix shapes do not fit {list(dom)}→{list(fresh)}: {exc}")

    def payload(self, kernel):
        core = kernel.core
        return {'M': core.M.tolist(), 'cov': core.cov.tolist(), 'mean': core.mean.tolist()}


class SynVarKernelSerializer(KernelSerializer):
    """
    ``term`` is DSL text for the full morphism ``dom → cod`` (both as
    canonical lists); each input must reach its like-named output directly.
    """
    term = serializers.CharField()

    def build_core(self, attrs, dom, fresh):
        category = self.category
        graph = elaborate(parse_term(attrs['term'], category.generators), category)
        cod = set_to_list(set(dom) | set(fresh))
        if tuple(graph.dom) != dom or tuple(graph.cod) != cod:
            raise serializers.ValidationError(
                f"term has type {list(graph.dom)}→{list(graph.cod)}, expected {list(dom)}→{list(cod)}"
            )
        for i, name in enumerate(dom):
            if graph.outputs[cod.index(name)] != (INPUT, i):
                raise serializers.ValidationError(f"term does not pass input {name!r} through")
        return category.compose(graph, category.wiring(cod, fresh))

    def payload(self, kernel):
        return {'term': render_term(graph_to_term(embed(kernel)), self.category.labels)}


KERNEL_SERIALIZERS = {
    'finstoch': FinStochKernelSerializer,
    'finrel': FinRelKernelSerializer,
    'gauss': GaussKernelSerializer,
    'synvar': SynVarKernelSerializer,
}


def build_category(header):
    """The instance described by a validated file header."""
    instance = header['instance']
    if instance in ('finstoch', 'finrel'):
        if 'alphabet' not in header and 'alphabets' not in header:
            raise serializers.ValidationError({'alphabet': "an alphabet or per-variable alphabets are required"})
        default = tuple(header['alphabet']) if 'alphabet' in header else None
        overrides = {name: tuple(values) for name, values in header.get('alphabets', {}).items()}
        for name, values in overrides.items():
            if len(set(values)) != len(values):
                raise serializers.ValidationError({'alphabets': f"alphabet of {name} repeats a value"})
        theta = Assignment(default=default, overrides=overrides)
        return FinStoch(theta) if instance == 'finstoch' else FinRel(theta)
    if instance == 'gauss':
        if 'dim' not in header and 'dims' not in header:
            raise serializers.ValidationError({'dim': "a dimension or per-variable dimensions are required"})
        return Gauss(Assignment(default=header.get('dim'), overrides=dict(header.get('dims', {}))))
    generators = {}
    for name, signature in header.get('generators', {}).items():
        try:
            generators[name] = Gen(signature['dom'], signature['cod'], label=name)
        except DibiError as exc:
            raise serializers.ValidationError({'generators': f"{name}: {exc}"})
    return SynVar(generators)


def category_header(category):
    """The header fields that rebuild ``category``."""
    header = {'instance': category.kind}
    if category.kind in ('finstoch', 'finrel'):
        if category.theta.default is not None:
            header['alphabet'] = list(category.theta.default)
        if category.theta.overrides:
            header['alphabets'] = {name: list(v) for name, v in sorted(category.theta.overrides.items())}
    elif category.kind == 'gauss':
        if category.theta.default is not None:
            header['dim'] = category.theta.default
        if category.theta.overrides:
            header['dims'] = dict(sorted(category.theta.overrides.items()))
    else:
        header['generators'] = {
            name: {'dom': list(gen.dom), 'cod': list(gen.cod)} for name, gen in sorted(category.generators.items())
        }
    return header


class KernelFileSerializer(serializers.Serializer):
    """
    The whole document. ``validated_data`` carries the rebuilt ``category``
    and the ``kernel_objects`` by name.
    """
    instance = serializers.ChoiceField(choices=INSTANCES)
    alphabet = serializers.ListField(child=serializers.CharField(), required=False, allow_empty=False)
    alphabets = serializers.DictField(
        child=serializers.ListField(child=serializers.CharField(), allow_empty=False), required=False
    )
    dim = serializers.IntegerField(min_value=0, required=False)
    dims = serializers.DictField(child=serializers.IntegerField(min_value=0), required=False)
    generators = serializers.DictField(child=GeneratorSerializer(), required=False)
    kernels = serializers.DictField(child=serializers.DictField())

    def validate(self, attrs):
        category = build_category(attrs)
        serializer_class = KERNEL_SERIALIZERS[attrs['instance']]
        kernels, errors = {}, {}
        for name, entry in attrs['kernels'].items():
            serializer = serializer_class(data=entry, context={'category': category})
            if serializer.is_valid():
                kernels[name] = serializer.validated_data['kernel']
            else:
                errors[name] = serializer.errors
        if errors:
            raise serializers.ValidationError({'kernels': errors})
        attrs['category'] = category
        attrs['kernel_objects'] = kernels
        return attrs


@dataclass
class KernelFile:
    category: object
    kernels: dict = field(default_factory=dict)

    def kernel(self, name):
        try:
            return self.kernels[name]
        except KeyError:
            raise KernelFileError(f"no kernel named {name!r}", f"/kernels/{name}") from None


def first_error(detail, path=''):
    """``(path, message)`` of the first leaf in a DRF error structure."""
    if isinstance(detail, dict):
        key = next(iter(detail))
        return first_error(detail[key], f"{path}/{key}")
    if isinstance(detail, list):
        for index, item in enumerate(detail):
            if item:
                if isinstance(item, (dict, list)):
                    return first_error(item, f"{path}/{index}")
                return path, str(item)
        return path, 'invalid'
    return path, str(detail)


def parse_kernel_file(data):
    """Validate a decoded document and return a KernelFile."""
    serializer = KernelFileSerializer(data=data)
    if not serializer.is_valid():
        path, message = first_error(serializer.errors)
        raise KernelFileError(message, path)
    return KernelFile(serializer.validated_data['category'], serializer.validated_data['kernel_objects'])


def load_kernel_file(path):
    try:
        with open(path, 'rb') as stream:
            data = JSONParser().parse(stream)
    except OSError as exc:
        raise KernelFileError(f"cannot read {path}: {exc.strerror}") from exc
    except JSONParseError as exc:
        raise KernelFileError(f"{path} is not JSON: {exc.detail}") from exc
    return parse_kernel_file(data)


def dump_kernel(kernel):
    """One kernel as its file entry."""
    return KERNEL_SERIALIZERS[kernel.category.kind](kernel, context={'category': kernel.category}).data


def dump_kernel_file(category, kernels):
    """A document holding ``kernels`` (name → Kernel) over ``category``."""
    return {**category_header(category), 'kernels': {name: dump_kernel(k) for name, k in kernels.items()}}


def render_document(document):
    return JSONRenderer().render(document, renderer_context={'indent': 2}).decode()
