from django import forms
from django.core.validators import MinValueValidator
from django.forms.utils import ValidationError

from .catalog import SYSTEM_CATALOG


def positive(value):
    if not value > 0:
        raise ValidationError('Ensure this value is positive.', code='min_value')


def _number_list(value, label, length=None):
    if not isinstance(value, list) or not all(isinstance(v, (int, float)) and not isinstance(v, bool)
                                               for v in value):
        raise ValidationError('%s must be a list of numbers.' % label, code='invalid')
    if length is not None and len(value) != length:
        raise ValidationError('%s must have %d entries, got %d.' % (label, length, len(value)), code='dimension')
    return [float(v) for v in value]


def _index_tuples(value, label, width):
    if not isinstance(value, list):
        raise ValidationError('%s must be a list.' % label, code='invalid')
    entries = []
    for entry in value:
        if width == 1 and isinstance(entry, int) and not isinstance(entry, bool):
            entries.append(entry)
            continue
        if (not isinstance(entry, list) or len(entry) != width
                or not all(isinstance(i, int) and not isinstance(i, bool) for i in entry)):
            raise ValidationError('%s entries must be lists of %d integers, got %r.' % (label, width, entry),
                                  code='dimension')
        entries.append(tuple(entry))
    return entries


class SystemForm(forms.Form):
    catalog = forms.ChoiceField(choices=[(name, name) for name in SYSTEM_CATALOG], required=False)
    name = forms.CharField(required=False)
    n = forms.IntegerField(min_value=1, required=False)
    fields = forms.JSONField(required=False)

    def clean(self):
        cleaned_data = super().clean()
        catalog = cleaned_data.get('catalog')
        if catalog:
            if cleaned_data.get('fields') is not None:
                raise ValidationError('Give either a catalog system or expression fields, not both.',
                                      code='invalid')
            return cleaned_data
        if cleaned_data.get('n') is None or cleaned_data.get('fields') is None:
            raise ValidationError('A system needs a catalog name or n and fields.', code='required')
        return cleaned_data


class BasisForm(forms.Form):
    s1 = forms.JSONField(required=False)
    s2 = forms.JSONField(required=False)
    s3 = forms.JSONField(required=False)

    def clean_s1(self):
        return _index_tuples(self.cleaned_data.get('s1') or [], 'S1', 1)

    def clean_s2(self):
        return _index_tuples(self.cleaned_data.get('s2') or [], 'S2', 2)

    def clean_s3(self):
        return _index_tuples(self.cleaned_data.get('s3') or [], 'S3', 3)


class QuadricForm(forms.Form):
    """A quadric given either as quad/lin/const or as a sphere center/radius_sq."""

    quad = forms.JSONField(required=False)
    lin = forms.JSONField(required=False)
    const = forms.FloatField(required=False)
    center = forms.JSONField(required=False)
    radius_sq = forms.FloatField(required=False, validators=[positive])

    def clean(self):
        cleaned_data = super().clean()
        general = cleaned_data.get('quad') is not None or cleaned_data.get('lin') is not None
        sphere = cleaned_data.get('center') is not None
        if general == sphere:
            raise ValidationError('Give either quad/lin/const or center/radius_sq.', code='invalid')
        if sphere:
            cleaned_data['center'] = _number_list(cleaned_data['center'], 'center')
            if cleaned_data.get('radius_sq') is None:
                raise ValidationError('A sphere needs radius_sq.', code='required')
            return cleaned_data
        lin = _number_list(cleaned_data.get('lin'), 'lin')
        quad = cleaned_data.get('quad')
        if not isinstance(quad, list) or len(quad) != len(lin):
            raise ValidationError('quad must be a %dx%d matrix.' % (len(lin), len(lin)), code='dimension')
        cleaned_data['quad'] = [_number_list(row, 'quad row', len(lin)) for row in quad]
        cleaned_data['lin'] = lin
        cleaned_data['const'] = cleaned_data.get('const') or 0.0
        return cleaned_data


class SceneForm(forms.Form):
    target = forms.JSONField()
    walls = forms.BooleanField(required=False)
    workspace = forms.JSONField()
    obstacles = forms.JSONField(required=False)

    def clean_target(self):
        return _number_list(self.cleaned_data.get('target'), 'target')

    def clean_workspace(self):
        workspace = self.cleaned_data.get('workspace')
        if not isinstance(workspace, dict):
            raise ValidationError('[scene.workspace] must be a table.', code='invalid')
        return workspace

    def clean_obstacles(self):
        obstacles = self.cleaned_data.get('obstacles') or []
        if not isinstance(obstacles, list) or not all(isinstance(o, dict) for o in obstacles):
            raise ValidationError('[[scene.obstacles]] must be an array of tables.', code='invalid')
        return obstacles


class ControlForm(forms.Form):
    epsilon = forms.FloatField(validators=[positive])
    gamma = forms.FloatField(validators=[positive])
    pairs = forms.JSONField(required=False)
    triples = forms.JSONField(required=False)

    def _entries(self, name, key, width, frequency_keys):
        if name not in self.data:
            return None
        entries = self.cleaned_data.get(name) or []
        if not isinstance(entries, list) or not all(isinstance(e, dict) for e in entries):
            raise ValidationError('[[control.%s]] must be an array of tables.' % name, code='invalid')
        result = {}
        for entry in entries:
            index = _index_tuples([entry.get(key)], key, width)[0]
            values = [entry.get(k) for k in frequency_keys]
            if not all(isinstance(v, int) and not isinstance(v, bool) and v != 0 for v in values):
                raise ValidationError('%s %s needs nonzero integer %s.' % (key, index, '/'.join(frequency_keys)),
                                      code='invalid')
            result[index] = values[0] if width == 2 else tuple(values)
        return result

    def clean_pairs(self):
        return self._entries('pairs', 'pair', 2, ('k',))

    def clean_triples(self):
        return self._entries('triples', 'triple', 3, ('k1', 'k2'))

    def clean(self):
        cleaned_data = super().clean()
        if ('pairs' in self.data) != ('triples' in self.data):
            raise ValidationError('Give both [[control.pairs]] and [[control.triples]] or neither '
                                  '(use empty arrays for empty sets).', code='invalid')
        return cleaned_data


class SimForm(forms.Form):
    x0 = forms.JSONField()
    t_max = forms.FloatField(required=False, validators=[positive])
    substeps_per_unit_frequency = forms.IntegerField(required=False, validators=[MinValueValidator(1)])
    stop_distance = forms.FloatField(required=False, validators=[positive])
    collision_margin = forms.FloatField(required=False, validators=[positive])
    gradient_tolerance = forms.FloatField(required=False, validators=[positive])

    def clean_x0(self):
        return _number_list(self.cleaned_data.get('x0'), 'x0')
