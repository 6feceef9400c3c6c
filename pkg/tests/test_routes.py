import pytest

from tunnelkit.core.app import create_app
from tunnelkit.harness.manifest import RunManifest


@pytest.fixture
def client():
    app = create_app()
    app.config['TESTING'] = True
    return app.test_client()


def test_index_lists_endpoints(client):
    response = client.get('/')
    assert response.status_code == 200
    data = response.get_json()
    assert data['name'] == 'tunnelkit'
    assert {'/api/analytics', '/api/trap/geometry', '/api/transmission', '/api/runs'} <= set(data['endpoints'])


def test_analytics(client):
    response = client.get('/api/analytics?barrier_nk=330&atoms=150000')
    assert response.status_code == 200
    data = response.get_json()
    assert 150.0 < data['mu'] < 190.0
    assert data['n_atoms'] == 150000.0


@pytest.mark.parametrize('query', ['', '?barrier_nk=330', '?barrier_nk=abc&atoms=1', '?barrier_nk=10&atoms=1000',
                                   '?barrier_nk=330&atoms=-1'])
def test_analytics_bad_requests(client, query):
    response = client.get(f'/api/analytics{query}')
    assert response.status_code == 400
    assert 'error' in response.get_json()


def test_trap_geometry(client):
    response = client.get('/api/trap/geometry?barrier_nk=290')
    assert response.status_code == 200
    data = response.get_json()
    assert 70.0 < data['trap_depth_nk'] < 120.0
    assert len(data['saddles_um']) == 2


@pytest.mark.parametrize('query', ['', '?barrier_nk=-5', '?barrier_nk=0'])
def test_trap_geometry_bad_requests(client, query):
    assert client.get(f'/api/trap/geometry{query}').status_code == 400


def test_transmission(client):
    response = client.get('/api/transmission?barrier_nk=290&points=11')
    assert response.status_code == 200
    data = response.get_json()
    assert len(data['curve']) == 11
    assert 0.15 <= data['beta_per_nk'] <= 0.3
    assert data['convention'] == 'waist'
    low, high = data['beta_window_nk']
    assert data['curve'][0]['energy_nk'] == pytest.approx(low)
    assert data['curve'][-1]['energy_nk'] == pytest.approx(high)


@pytest.mark.parametrize('query', ['?barrier_nk=290&points=1', '?barrier_nk=290&e_min=80&e_max=70',
                                   '?barrier_nk=290&convention=hwhm', '?points=5'])
def test_transmission_bad_requests(client, query):
    assert client.get(f'/api/transmission{query}').status_code == 400


@pytest.fixture
def runs_root(client, tmp_path):
    client.application.config['OUTPUT_DIR'] = str(tmp_path)
    sweep = tmp_path / 'sweep'
    for name, status, started in (('a', 'completed', '2024-01-01T00:00:00+00:00'),
                                  ('b', 'aborted', '2024-02-01T00:00:00+00:00')):
        directory = sweep / name
        directory.mkdir(parents=True)
        manifest = RunManifest('decay', name, 'hash', {}, started_at=started)
        manifest.status = status
        manifest.write(str(directory))
    return tmp_path


def test_runs(client, runs_root):
    response = client.get('/api/runs')
    assert response.status_code == 200
    assert [run['label'] for run in response.get_json()] == ['b', 'a']

    response = client.get('/api/runs?output_dir=sweep&status=completed')
    assert [run['directory'] for run in response.get_json()] == ['a']

    assert client.get('/api/runs?output_dir=missing').status_code == 400


@pytest.mark.parametrize('output_dir', ['/', '..', 'sweep/../..', '/etc'])
def test_runs_stay_inside_output_root(client, runs_root, output_dir):
    response = client.get('/api/runs', query_string={'output_dir': output_dir})
    assert response.status_code == 400
    assert 'output root' in response.get_json()['error']
